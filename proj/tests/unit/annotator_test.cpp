#include "fixtures.hpp"

#include "hfa/annotator.hpp"
#include "hfa/error.hpp"
#include "hfa/text.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hfa;
using namespace hfa::annotator;
using taxonomy::ConceptCode;

namespace {

const taxonomy::Taxonomy& tax() { return fixtures::bundled_taxonomy(); }

bool assigns(const Prediction& p, const ConceptCode& c) {
    return std::any_of(p.assigned.begin(), p.assigned.end(), [&](const ScoredConcept& s) { return s.code == c; });
}

// Grid search written from the calibration contract: F = 2tp/(2tp+fp+fn),
// highest threshold among the maxima.
double oracle_threshold(const AnnotationModel& m, const ConceptCode& code, const std::vector<TrainingExample>& ex) {
    const auto& centroid = m.prototypes().at(code).centroid;
    std::vector<double> scores;
    for (const auto& e : ex) scores.push_back(cosine(m.featurize(e.text), centroid));
    double best_t = 0.0, best_f = -1.0;
    for (int k = 1; k <= 20; ++k) {
        const double t = k / 20.0;
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < ex.size(); ++i) {
            const bool pred = scores[i] + 1e-9 >= t;
            const bool gold = ex[i].concepts.contains(code);
            tp += pred && gold;
            fp += pred && !gold;
            fn += !pred && gold;
        }
        const double f = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
        if (f >= best_f) {
            best_f = f;
            best_t = t;
        }
    }
    return best_t;
}

}  // namespace

TEST(Tokenizer, LowercaseStopwordsMinLength) {
    const auto t = TokenizerConfig::defaults();
    EXPECT_EQ(t.tokenize("The CTG was a Trace x"), (std::vector<std::string>{"ctg", "trace"}));
    EXPECT_EQ(t.tokenize("not"), std::vector<std::string>{"not"});
}

TEST(Featurize, DeterministicEmptyAndStopwordInvariant) {
    const auto m = train(fixtures::toy_corpus(), tax());
    EXPECT_EQ(m.featurize("The CTG trace was misinterpreted"), m.featurize("The CTG trace was misinterpreted"));
    EXPECT_TRUE(m.featurize("").is_zero());
    EXPECT_TRUE(m.featurize("zebra quantum").is_zero());
    EXPECT_EQ(m.featurize("the CTG trace"), m.featurize("CTG and the trace"));
    const auto v = m.featurize("CTG trace CTG");
    double sq = 0;
    for (const auto& [_, w] : v.weights) sq += w * w;
    EXPECT_NEAR(v.norm, std::sqrt(sq), 1e-12);
    EXPECT_NEAR(v.weight("ctg"), 2.0 * m.idf().at("ctg"), 1e-12);
}

TEST(Train, ToyPrototypesAndSupport) {
    const auto m = train(fixtures::toy_corpus(), tax());
    EXPECT_EQ(m.version(), 1);
    ASSERT_EQ(m.prototypes().size(), 4u);
    for (const auto& [code, p] : m.prototypes()) {
        EXPECT_EQ(p.support, 5u) << code.str();
        EXPECT_NEAR(p.centroid.norm, 1.0, 1e-12);
        EXPECT_GE(p.threshold, 0.05);
        EXPECT_LE(p.threshold, 1.0);
    }
    EXPECT_EQ(m.training_log(), (std::vector<TrainingLogEntry>{{"initial", 20}}));
    EXPECT_TRUE(m.prototypes().at(ConceptCode("5.2")).seed_terms.contains("ctg"));
}

TEST(Train, Errors) {
    try {
        train({}, tax());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyTrainingSet);
    }
    auto ex = fixtures::toy_corpus();
    ex[0].concepts = {ConceptCode("9.9")};
    try {
        train(ex, tax());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnresolvableConcept);
    }
    ex[0].concepts = {ConceptCode("3")};  // interior, not annotatable
    EXPECT_THROW(train(ex, tax()), Error);
}

TEST(Train, DeterministicBitIdentical) {
    EXPECT_EQ(model_to_json(train(fixtures::toy_corpus(), tax())), model_to_json(train(fixtures::toy_corpus(), tax())));
}

TEST(Predict, MemorizesToyCorpus) {
    const auto toy = fixtures::toy_corpus();
    const auto m = train(toy, tax());
    std::size_t hit = 0, total = 0;
    for (const auto& e : toy) {
        const auto p = m.predict(e.sentence_id, e.text);
        for (const auto& c : e.concepts) {
            ++total;
            hit += assigns(p, c);
        }
        for (const auto& s : p.assigned) {
            EXPECT_GE(s.score + kThresholdTolerance, m.prototypes().at(s.code).threshold);
            EXPECT_LE(std::abs(s.score), 1.0 + 1e-12);
        }
    }
    EXPECT_GE(static_cast<double>(hit) / total, 0.95);
}

TEST(Predict, EmptyTextAndUntrained) {
    const auto m = train(fixtures::toy_corpus(), tax());
    EXPECT_TRUE(m.predict("").assigned.empty());
    try {
        AnnotationModel{}.predict("anything");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UntrainedModel);
    }
}

TEST(Predict, CtgSampleSentence) {
    auto ex = fixtures::toy_corpus();
    for (const char* text : {"An abnormal CTG was not recognised during labour.",
                             "Staff did not recognise the abnormal CTG trace."}) {
        TrainingExample similar;
        similar.sentence_id = {"toy", ex.size()};
        similar.text = text;
        similar.concepts = {ConceptCode("5.2")};
        ex.push_back(similar);
    }
    const auto m = train(ex, tax());
    const auto p = m.predict("The abnormal CTG was not recognised and did not prompt escalation to the obstetric team.");
    EXPECT_TRUE(assigns(p, ConceptCode("5.2")));
}

TEST(Calibrate, SeparableConceptTakesHighestPerfectThreshold) {
    const auto m = train(fixtures::toy_corpus(), tax());
    // Every toy concept is separable on its training set, so the chosen
    // threshold is the largest grid value not above the weakest positive.
    for (const auto& [code, p] : m.prototypes()) {
        double weakest = 1.0;
        for (const auto& e : m.examples()) {
            if (e.concepts.contains(code)) weakest = std::min(weakest, cosine(m.featurize(e.text), p.centroid));
        }
        EXPECT_LE(p.threshold, weakest + kThresholdTolerance);
        EXPECT_GT(p.threshold + 0.05, weakest);
    }
}

TEST(Calibrate, SinglePositiveKeepsTrainingRecall) {
    auto ex = fixtures::toy_corpus();
    ex.push_back({{"toy", 99}, "The interpreter was not booked for the Mother.", {ConceptCode("3.8")}, ExampleSource::Expert, "toy"});
    const auto m = train(ex, tax());
    EXPECT_EQ(m.prototypes().at(ConceptCode("3.8")).support, 1u);
    EXPECT_TRUE(assigns(m.predict(ex.back().text), ConceptCode("3.8")));
}

TEST(Calibrate, MatchesGridSearchOracleOnRandomFixture) {
    const std::vector<std::string> words = {"ctg", "trace", "escalation", "referral", "oxytocin", "dose", "bmi",
                                            "weight", "midwife", "registrar", "delay", "review", "plan",
                                            "guidance", "handover", "monitoring", "booking", "labour", "ward",
                                            "consultant", "infusion", "risk", "family", "interpreter", "team"};
    const std::vector<ConceptCode> codes = {ConceptCode("5.2"), ConceptCode("3.6"), ConceptCode("4.3"),
                                            ConceptCode("6.1.1.1")};
    std::mt19937 rng(50);
    std::vector<TrainingExample> ex;
    for (std::size_t i = 0; i < 50; ++i) {
        TrainingExample e;
        e.sentence_id = {"rand", i};
        for (int w = 0; w < 6; ++w) e.text += words[rng() % words.size()] + " ";
        e.concepts.insert(codes[rng() % codes.size()]);
        if (rng() % 3 == 0) e.concepts.insert(codes[rng() % codes.size()]);
        ex.push_back(std::move(e));
    }
    const auto m = train(ex, tax());
    for (const auto& [code, p] : m.prototypes()) {
        EXPECT_DOUBLE_EQ(p.threshold, oracle_threshold(m, code, ex)) << code.str();
    }
}

TEST(Update, EmptyVerdictsOnlyBumpVersion) {
    const auto m = train(fixtures::toy_corpus(), tax());
    const auto n = update_with_verdicts(m, {}, tax(), "noop");
    EXPECT_EQ(n.version(), 2);
    EXPECT_EQ(n.prototypes(), m.prototypes());
    EXPECT_EQ(n.idf(), m.idf());
    EXPECT_EQ(n.training_log().back(), (TrainingLogEntry{"noop", 0}));
    EXPECT_EQ(m.version(), 1);
}

TEST(Update, CorrectedSentencesGetTheirConcepts) {
    const auto toy = fixtures::toy_corpus();
    const auto m = train(toy, tax());
    std::vector<TrainingExample> verdicts;
    for (std::size_t i : {0u, 7u, 15u}) {
        auto v = toy[i];
        v.concepts.insert(ConceptCode("3.5"));
        v.source = ExampleSource::Verdict;
        v.batch_id = "b2";
        verdicts.push_back(v);
    }
    const auto n = update_with_verdicts(m, verdicts, tax());
    EXPECT_EQ(n.version(), 2);
    EXPECT_EQ(n.training_log().back(), (TrainingLogEntry{"b2", 3}));
    for (const auto& v : verdicts) {
        const auto p = n.predict(v.sentence_id, v.text);
        for (const auto& c : v.concepts) EXPECT_TRUE(assigns(p, c)) << v.text << " " << c.str();
    }
    EXPECT_TRUE(n.calibration_conflicts().empty());
}

TEST(Update, LastVerdictPerSentenceWins) {
    const auto toy = fixtures::toy_corpus();
    const auto m = train(toy, tax());
    auto a = toy[3];
    a.concepts = {ConceptCode("3.5")};
    a.batch_id = "b2";
    auto b = a;
    b.concepts = {ConceptCode("5.2")};
    const auto n = update_with_verdicts(m, {a, b}, tax());
    std::size_t copies = 0;
    for (const auto& e : n.examples()) {
        if (e.sentence_id == a.sentence_id) {
            ++copies;
            EXPECT_EQ(e.concepts, b.concepts);
        }
    }
    EXPECT_EQ(copies, 1u);
}

TEST(Persist, SaveLoadEqualityAndPredictions) {
    const auto m = train(fixtures::toy_corpus(), tax());
    const auto dir = fixtures::scratch_dir("model");
    save_model(m, dir / "m.json");
    const auto back = load_model(dir / "m.json");
    EXPECT_EQ(back, m);
    for (const auto& s : fixtures::hundred_sentences()) EXPECT_EQ(back.predict(s), m.predict(s));
}

TEST(Persist, TruncatedFileIsCorrupt) {
    const auto m = train(fixtures::toy_corpus(), tax());
    const auto json = model_to_json(m);
    const auto dir = fixtures::scratch_dir("model-corrupt");
    text::write_file(dir / "m.json", json.substr(0, json.size() / 2));
    try {
        load_model(dir / "m.json");
        FAIL();
    } catch (const PositionedError& e) {
        EXPECT_EQ(e.code(), ErrorCode::CorruptModelFile);
        EXPECT_LE(e.position(), json.size() / 2);
    }
}

TEST(TrainingFiles, JsonlRoundTripThroughLabels) {
    const auto toy = fixtures::toy_corpus();
    const auto text = write_training_jsonl(toy, tax());
    EXPECT_NE(text.find("Technologies and Tools-Interpretation"), std::string::npos);
    const auto back = read_training_jsonl(text, tax(), "toy");
    EXPECT_EQ(back, toy);
    EXPECT_THROW(read_training_jsonl("{\"doc_id\":\"d\",\"idx\":0,\"text\":\"x\",\"concepts\":[\"Nope\"]}\n", tax()),
                 Error);
}
