#include "fixtures.hpp"

#include <cstdlib>
#include <random>

namespace hfa::fixtures {

namespace fs = std::filesystem;

fs::path fixture_path(const std::string& relative) { return fs::path(HFA_FIXTURE_DIR) / relative; }

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hfa-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const taxonomy::Taxonomy& bundled_taxonomy() {
    static const taxonomy::Taxonomy t = taxonomy::load_default_taxonomy();
    return t;
}

std::vector<annotator::TrainingExample> toy_corpus() {
    const std::vector<std::pair<std::string, const char*>> rows = {
        {"The CTG trace was misinterpreted by the midwife.", "5.2"},
        {"Fetal heart decelerations on the CTG were not recognised.", "5.2"},
        {"The CTG showed a pathological pattern that was classified as normal.", "5.2"},
        {"Staff misread the CTG tracing during the second stage.", "5.2"},
        {"The CTG classification was wrong at the hourly check.", "5.2"},
        {"There was a delay in escalation to the consultant obstetrician.", "3.6"},
        {"The midwife did not escalate concerns to the registrar.", "3.6"},
        {"Referral to the obstetric team was not made.", "3.6"},
        {"Escalation to senior staff happened too late.", "3.6"},
        {"The coordinator was not informed and no referral followed.", "3.6"},
        {"Oxytocin was administered at a higher rate than prescribed.", "4.3"},
        {"The antibiotics dose was given two hours late.", "4.3"},
        {"Magnesium sulphate was not administered as prescribed.", "4.3"},
        {"The prescribed insulin dose was administered twice.", "4.3"},
        {"Syntocinon infusion was increased without a prescription.", "4.3"},
        {"The Mother had a raised BMI at booking.", "6.1.1.1"},
        {"Her body mass index was above forty.", "6.1.1.1"},
        {"The Mother's weight increased significantly during pregnancy.", "6.1.1.1"},
        {"Obesity was recorded as a physical risk factor.", "6.1.1.1"},
        {"Her height and weight gave a BMI of 41.", "6.1.1.1"},
    };
    std::vector<annotator::TrainingExample> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        annotator::TrainingExample e;
        e.sentence_id = {"toy", i};
        e.text = rows[i].first;
        e.concepts = {taxonomy::ConceptCode(rows[i].second)};
        e.batch_id = "toy";
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::string> hundred_sentences() {
    const auto toy = toy_corpus();
    std::vector<std::string> out;
    for (const auto& e : toy) out.push_back(e.text);
    std::mt19937 rng(100);
    while (out.size() < 100) {
        const auto& a = toy[rng() % toy.size()].text;
        const auto& b = toy[rng() % toy.size()].text;
        out.push_back(a.substr(0, a.size() / 2) + " " + b.substr(b.size() / 2));
    }
    return out;
}

std::vector<LabelledSentence> selection_fixture() {
    return {
        // cue outside any affirmation scope
        {"The midwife did not review the trace.", true},
        {"The registrar was not called to the ward.", true},
        {"Staff were not aware of the plan.", true},
        {"The Mother never received a call back.", true},
        {"There was no handover between shifts.", true},
        {"The plan was changed without discussion.", true},
        {"The team failed to act on the concerns.", true},
        {"The coordinator was unable to find a bed.", true},
        {"The review did not happen that evening.", true},
        {"The family were not told about the change.", true},
        {"No senior review took place overnight.", true},
        {"The Mother was not offered an interpreter.", true},
        {"The unit never escalated the delay.", true},
        {"Observations were recorded without a chart.", true},
        {"The team failed to document the decision.", true},
        {"The consultant was unable to attend in person.", true},
        {"The handover was not structured.", true},
        {"The results were not followed up.", true},
        {"There was no plan for the transfer.", true},
        {"The Mother did not see a consultant.", true},
        {"The care was not in line with local guidance.", true},
        {"Staff did not act, although the plan was in line with guidance.", true},
        {"The review was delayed and no escalation followed, in line with nothing.", true},
        {"The referral was not made; care was in line with guidance.", true},
        {"In line with guidance the team met, but the notes were not filed.", true},
        // cues only inside an affirmation scope
        {"The plan was in line with guidance that does not require review.", false},
        {"Care continued in line with advice for women with no complications.", false},
        {"The decision was in line with guidance without exception.", false},
        {"Treatment was in line with the protocol never used before.", false},
        {"The team acted in line with local policy not to delay.", false},
        {"Monitoring was in line with guidance, and the team met daily.", false},
        {"The plan was made in line with no further concerns.", false},
        {"The transfer was in line with advice that was not urgent.", false},
        {"Discussions were held in line with the policy for women who did not attend.", false},
        {"Staffing was in line with the roster without gaps.", false},
        // no cue at all
        {"The Mother was appropriately risk assessed at booking.", false},
        {"The midwife reviewed the trace every hour.", false},
        {"The registrar attended promptly.", false},
        {"The plan of care was shared with the family.", false},
        {"The coordinator allocated a second midwife.", false},
        {"Labour progressed as expected.", false},
        {"The consultant reviewed the Mother on the ward.", false},
        {"The handover was structured and complete.", false},
        {"The team held a debrief after the birth.", false},
        {"An interpreter was booked for every appointment.", false},
        {"The Mother was transferred to the labour ward.", false},
        {"Records were complete and legible.", false},
        {"The family received a written summary.", false},
        {"The unit followed the escalation policy.", false},
        {"The senior midwife supported the team.", false},
    };
}

std::vector<std::string> sample_segments() {
    return {
        "This meant that during pregnancy the Mother did not have an anaesthetic review, referral to a dietitian, "
        "or information shared regarding the risks associated with raised BMI during pregnancy and the need for high "
        "dose folic acid.",
        "The abnormal CTG was not recognised and did not prompt escalation to the obstetric team, in line with local "
        "guidance.",
        "Obstetric reviews of the Mother whilst in labour were not carried out in line with local guidance, these would "
        "have provided an earlier opportunity for a holistic review of the Mother's risk status and care pathway.",
    };
}

std::vector<GroupCounts> group_counts_test_a() {
    return {
        {"Asian", 59, 28},   {"Black", 54, 27},        {"Data not received", 33, 22},
        {"Mixed Background", 9, 4}, {"Other White", 32, 14}, {"White British", 501, 187},
    };
}

GroupFixture group_fixture(const std::vector<GroupCounts>& counts) {
    GroupFixture f;
    const taxonomy::ConceptCode code("3.6");
    for (const auto& g : counts) {
        const auto doc = "doc-" + g.group;
        f.doc_groups[doc] = g.group;
        std::size_t idx = 0;
        for (std::uint64_t i = 0; i < g.correct; ++i, ++idx) {
            f.gold[{doc, idx}] = {code};
            f.predicted[{doc, idx}] = {code};
        }
        for (std::uint64_t i = 0; i < g.incorrect; ++i, ++idx) {
            f.gold[{doc, idx}] = {code};
            f.predicted[{doc, idx}] = {};
        }
    }
    return f;
}

annotator::AnnotationModel toy_model() { return annotator::train(toy_corpus(), bundled_taxonomy()); }

void populate_group_store(workflow::Store& store, const std::vector<GroupCounts>& counts, const std::string& batch_id) {
    if (!store.latest_version()) store.register_model(toy_model(), {"toy"});
    const taxonomy::ConceptCode escalation("3.6"), ctg("5.2");
    const int version = *store.latest_version();
    std::vector<workflow::PredictedSentence> preds;
    std::vector<bool> hit;
    for (const auto& g : counts) {
        const auto doc = batch_id + "-" + g.group;
        for (std::uint64_t i = 0; i < g.correct + g.incorrect; ++i) {
            workflow::PredictedSentence p;
            p.prediction.sentence_id = {doc, static_cast<std::size_t>(i)};
            p.prediction.model_version = version;
            const bool correct = i < g.correct;
            p.prediction.assigned = {{correct ? escalation : ctg, 0.9}};
            p.text = "sentence " + std::to_string(i);
            p.group = g.group;
            preds.push_back(std::move(p));
            hit.push_back(correct);
        }
    }
    const auto first = store.tasks().size();
    store.enqueue_predictions(preds, batch_id);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        workflow::Verdict v;
        v.task_id = store.tasks()[first + i].task_id;
        v.annotator_id = "expert";
        if (hit[i]) {
            v.decisions[escalation] = workflow::Decision::Correct;
        } else {
            v.decisions[ctg] = workflow::Decision::Incorrect;
            v.added = {escalation};
        }
        store.record_verdict(std::move(v));
    }
}

std::vector<DistributionCounts> distribution_counts() {
    return {
        {"Asian", 6, 87, 15},   {"Black", 7, 81, 12},        {"Data not received", 4, 55, 14},
        {"Mixed Background", 1, 13, 13}, {"White British", 52, 688, 14}, {"White Other", 6, 46, 8},
    };
}

std::vector<std::optional<double>> concept_column_black() {
    const std::optional<double> _;
    return {83.33, _,  _,     0,  75,    66.67, _,  0,     50, 100, 33.33, 50,
            100,   66.67, _, 62.5, 66.67, 66.67, 100, _, 80,  _,   50,    100};
}

std::vector<std::optional<double>> concept_column_white_british() {
    const std::optional<double> _;
    return {69.23, 100, 50, 60, 73.68, 67.74, 72.73, 65.22, 81.82, 75,    80, 73.53,
            70.27, 82.61, _, 76.79, 75.86, 67.39, 63.64, 75,  70,  90.91, 53.85, 68.42};
}

}  // namespace hfa::fixtures
