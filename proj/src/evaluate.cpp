#include "mhc/evaluate.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mhc/corpus.hpp"
#include "mhc/random.hpp"

namespace mhc {

namespace {

std::string fixed3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

double safe_div(std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    return s.substr(b);
}

}  // namespace

ConfusionMatrix ConfusionMatrix::zeros(const LabelSet& labels) {
    ConfusionMatrix cm;
    cm.label_order = labels;
    cm.counts.assign(labels.size(), std::vector<std::int64_t>(labels.size(), 0));
    cm.abstained.assign(labels.size(), 0);
    return cm;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t i) const {
    std::int64_t s = abstained.empty() ? 0 : abstained[i];
    for (auto v : counts[i]) s += v;
    return s;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t j) const {
    std::int64_t s = 0;
    for (const auto& row : counts) s += row[j];
    return s;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) s += counts[i][i];
    return s;
}

std::int64_t ConfusionMatrix::abstained_total() const {
    std::int64_t s = 0;
    for (auto v : abstained) s += v;
    return s;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t s = abstained_total();
    for (const auto& row : counts)
        for (auto v : row) s += v;
    return s;
}

std::string ConfusionMatrix::to_csv() const {
    std::ostringstream os;
    os << "true\\pred";
    for (auto l : label_order.labels()) os << ',' << to_string(l);
    const bool with_unknown = abstained_total() > 0;
    if (with_unknown) os << ",Unknown";
    os << '\n';
    for (std::size_t i = 0; i < size(); ++i) {
        os << to_string(label_order[i]);
        for (auto v : counts[i]) os << ',' << v;
        if (with_unknown) os << ',' << abstained[i];
        os << '\n';
    }
    return os.str();
}

ConfusionMatrix ConfusionMatrix::from_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        rows.push_back(std::move(cells));
    }
    if (rows.size() < 2) throw ValidationError("confusion CSV needs a header and at least one row");
    const auto& header = rows.front();
    std::vector<std::string> col_names(header.begin() + 1, header.end());
    const bool with_unknown = !col_names.empty() && col_names.back() == "Unknown";
    if (with_unknown) col_names.pop_back();

    std::vector<std::string> row_names;
    for (std::size_t r = 1; r < rows.size(); ++r) row_names.push_back(rows[r].at(0));
    if (row_names != col_names) throw ValidationError("confusion CSV rows and columns must list the same labels in the same order");

    std::vector<ClassLabel> labels;
    for (const auto& n : col_names) labels.push_back(label_from_string(n));
    ConfusionMatrix cm = zeros(LabelSet(labels));
    if (cm.label_order.labels() != labels) throw ValidationError("confusion CSV labels must be in canonical order");
    const std::size_t width = col_names.size() + (with_unknown ? 1 : 0);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != width + 1) throw ValidationError("confusion CSV row " + std::to_string(r) + " has the wrong width");
        for (std::size_t c = 0; c < width; ++c) {
            std::int64_t v = 0;
            try {
                v = std::stoll(rows[r][c + 1]);
            } catch (const std::exception&) {
                throw ValidationError("confusion CSV cell '" + rows[r][c + 1] + "' is not an integer");
            }
            if (v < 0) throw ValidationError("confusion CSV contains a negative count");
            if (c < col_names.size())
                cm.counts[r - 1][c] = v;
            else
                cm.abstained[r - 1] = v;
        }
    }
    return cm;
}

ConfusionMatrix ConfusionMatrix::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open confusion matrix " + path.string());
    return from_csv(in);
}

nlohmann::json ConfusionMatrix::to_json() const {
    nlohmann::json j = {{"label_order", label_order.names()}, {"counts", counts}};
    if (abstained_total() > 0) j["abstained"] = abstained;
    return j;
}

std::string ConfusionMatrix::to_markdown() const {
    std::ostringstream os;
    os << "| True \\ Predicted |";
    for (auto l : label_order.labels()) os << ' ' << to_string(l) << " |";
    const bool with_unknown = abstained_total() > 0;
    if (with_unknown) os << " Unknown |";
    os << "\n|---|";
    for (std::size_t i = 0; i < size() + (with_unknown ? 1 : 0); ++i) os << "---:|";
    os << '\n';
    for (std::size_t i = 0; i < size(); ++i) {
        os << "| " << to_string(label_order[i]) << " |";
        for (auto v : counts[i]) os << ' ' << v << " |";
        if (with_unknown) os << ' ' << abstained[i] << " |";
        os << '\n';
    }
    return os.str();
}

ConfusionMatrix confusion_matrix(const std::vector<ClassLabel>& truth, const std::vector<ClassLabel>& predicted,
                                 const LabelSet& label_order) {
    if (truth.size() != predicted.size()) throw ValidationError("truth and predictions differ in length");
    auto cm = ConfusionMatrix::zeros(label_order);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto ti = label_order.find(truth[i]);
        const auto pi = label_order.find(predicted[i]);
        if (!ti || !pi)
            throw ValidationError("label '" + std::string(to_string(ti ? predicted[i] : truth[i])) +
                                  "' is outside the evaluated label set");
        ++cm.counts[*ti][*pi];
    }
    return cm;
}

// ---------------------------------------------------------------------------

const ClassMetrics& MetricsReport::of(ClassLabel label) const {
    for (const auto& m : per_class)
        if (m.label == label) return m;
    throw ValidationError("label '" + std::string(to_string(label)) + "' not in report");
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& m : per_class)
        classes.push_back({{"label", std::string(to_string(m.label))},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support}});
    return {{"setup", setup},
            {"per_class", classes},
            {"accuracy", accuracy},
            {"macro", {{"precision", macro.precision}, {"recall", macro.recall}, {"f1", macro.f1}}},
            {"weighted", {{"precision", weighted.precision}, {"recall", weighted.recall}, {"f1", weighted.f1}}},
            {"micro", {{"precision", micro.precision}, {"recall", micro.recall}, {"f1", micro.f1}}},
            {"total", total},
            {"unknown_count", unknown_count},
            {"warnings", warnings}};
}

std::string MetricsReport::to_markdown() const {
    std::ostringstream os;
    os << "| Class | Precision | Recall | F1 | Support |\n|---|---:|---:|---:|---:|\n";
    for (const auto& m : per_class)
        os << "| " << to_string(m.label) << " | " << fixed3(m.precision) << " | " << fixed3(m.recall) << " | "
           << fixed3(m.f1) << " | " << m.support << " |\n";
    os << "| Accuracy | | | " << fixed3(accuracy) << " | " << total << " |\n";
    os << "| Macro avg | " << fixed3(macro.precision) << " | " << fixed3(macro.recall) << " | " << fixed3(macro.f1)
       << " | " << total << " |\n";
    os << "| Weighted avg | " << fixed3(weighted.precision) << " | " << fixed3(weighted.recall) << " | "
       << fixed3(weighted.f1) << " | " << total << " |\n";
    if (unknown_count > 0) os << "\nUnknown predictions: " << unknown_count << '\n';
    return os.str();
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm, std::string setup) {
    const auto total = cm.total();
    if (total <= 0) throw ValidationError("confusion matrix is empty");
    MetricsReport r;
    r.setup = setup.empty() ? std::to_string(cm.size()) + "-class" : std::move(setup);
    r.total = total;
    r.unknown_count = cm.abstained_total();
    r.accuracy = safe_div(cm.trace(), total);

    const double c = static_cast<double>(cm.size());
    for (std::size_t i = 0; i < cm.size(); ++i) {
        ClassMetrics m;
        m.label = cm.label_order[i];
        m.support = cm.row_sum(i);
        const auto col = cm.col_sum(i);
        const auto tp = cm.counts[i][i];
        if (col == 0) r.warnings.push_back("precision of " + std::string(to_string(m.label)) + " undefined (no predictions); set to 0");
        if (m.support == 0) r.warnings.push_back("recall of " + std::string(to_string(m.label)) + " undefined (no samples); set to 0");
        m.precision = safe_div(tp, col);
        m.recall = safe_div(tp, m.support);
        m.f1 = f1_of(m.precision, m.recall);

        r.macro.precision += m.precision / c;
        r.macro.recall += m.recall / c;
        r.macro.f1 += m.f1 / c;
        const double w = static_cast<double>(m.support) / static_cast<double>(total);
        r.weighted.precision += w * m.precision;
        r.weighted.recall += w * m.recall;
        r.weighted.f1 += w * m.f1;
        r.per_class.push_back(m);
    }
    std::int64_t predicted_total = 0;
    for (std::size_t j = 0; j < cm.size(); ++j) predicted_total += cm.col_sum(j);
    r.micro.precision = safe_div(cm.trace(), predicted_total);
    r.micro.recall = safe_div(cm.trace(), total);
    r.micro.f1 = f1_of(r.micro.precision, r.micro.recall);
    return r;
}

// ---------------------------------------------------------------------------

const SetupComparisonRow& SetupComparison::row(const std::string& metric) const {
    for (const auto& r : rows)
        if (r.metric == metric) return r;
    throw ValidationError("no comparison row '" + metric + "'");
}

nlohmann::json SetupComparison::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"metric", r.metric}, {first_setup, r.first}, {second_setup, r.second}, {"delta", r.delta}});
    return {{"first_setup", first_setup}, {"second_setup", second_setup}, {"rows", arr}};
}

std::string SetupComparison::to_markdown() const {
    std::ostringstream os;
    os << "| Setup |";
    for (const auto& r : rows) os << ' ' << r.metric << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < rows.size(); ++i) os << "---:|";
    os << "\n| " << first_setup << " |";
    for (const auto& r : rows) os << ' ' << fixed3(r.first) << " |";
    os << "\n| " << second_setup << " |";
    for (const auto& r : rows) os << ' ' << fixed3(r.second) << " |";
    os << "\n| Delta |";
    for (const auto& r : rows) os << ' ' << (r.delta >= 0 ? "+" : "") << fixed3(r.delta) << " |";
    os << '\n';
    return os.str();
}

SetupComparison compare_setups(const MetricsReport& first, const MetricsReport& second) {
    SetupComparison c;
    c.first_setup = first.setup;
    c.second_setup = second.setup;
    if (c.first_setup == c.second_setup) {
        c.first_setup += " (a)";
        c.second_setup += " (b)";
    }
    auto add = [&c](std::string name, double a, double b) { c.rows.push_back({std::move(name), a, b, b - a}); };
    add("Accuracy", first.accuracy, second.accuracy);
    add("Precision", first.macro.precision, second.macro.precision);
    add("Recall", first.macro.recall, second.macro.recall);
    add("F1", first.macro.f1, second.macro.f1);
    return c;
}

std::vector<bool> collapse_binary(const std::vector<ClassLabel>& predicted, const std::set<ClassLabel>& positive_set) {
    if (positive_set.empty()) throw ValidationError("positive set must not be empty");
    std::vector<bool> out;
    out.reserve(predicted.size());
    for (auto l : predicted) out.push_back(positive_set.count(l) > 0);
    return out;
}

nlohmann::json BinaryScores::to_json() const {
    return {{"precision", precision}, {"recall", recall}, {"f1", f1}, {"accuracy", accuracy},
            {"tp", tp},               {"fp", fp},         {"fn", fn}, {"tn", tn}};
}

BinaryScores binary_scores(const std::vector<bool>& gold, const std::vector<bool>& predicted) {
    if (gold.size() != predicted.size()) throw ValidationError("gold and predictions differ in length");
    BinaryScores s;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] && predicted[i]) ++s.tp;
        else if (!gold[i] && predicted[i]) ++s.fp;
        else if (gold[i]) ++s.fn;
        else ++s.tn;
    }
    s.precision = safe_div(s.tp, s.tp + s.fp);
    s.recall = safe_div(s.tp, s.tp + s.fn);
    s.f1 = f1_of(s.precision, s.recall);
    s.accuracy = safe_div(s.tp + s.tn, static_cast<std::int64_t>(gold.size()));
    return s;
}

std::map<std::string, bool> aggregate_user_streams(const std::vector<std::string>& user_ids,
                                                   const std::vector<bool>& post_positive) {
    if (user_ids.size() != post_positive.size()) throw ValidationError("user ids and post decisions differ in length");
    std::map<std::string, bool> out;
    for (std::size_t i = 0; i < user_ids.size(); ++i) {
        auto [it, inserted] = out.try_emplace(user_ids[i], false);
        it->second = it->second || post_positive[i];
    }
    return out;
}

MetricsReport random_baseline(const LabelSet& labels, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ValidationError("random baseline needs n >= 1");
    if (labels.empty()) throw ValidationError("random baseline needs at least one label");
    Rng rng(seed);
    std::vector<ClassLabel> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
        truth[i] = labels[rng.uniform_index(labels.size())];
        pred[i] = labels[rng.uniform_index(labels.size())];
    }
    return metrics_from_confusion(confusion_matrix(truth, pred, labels), "random-" + std::to_string(labels.size()) + "-class");
}

}  // namespace mhc
