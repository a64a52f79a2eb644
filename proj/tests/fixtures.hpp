#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mhc/corpus.hpp"
#include "mhc/evaluate.hpp"
#include "mhc/labels.hpp"

namespace fixtures {

// Published six-class confusion matrix (rows true, columns predicted).
inline const char* kSixClassCsv =
    "true\\pred,Stress,Anxiety,Depression,PTSD,Suicidal,None\n"
    "Stress,208,7,3,7,1,1\n"
    "Anxiety,5,32,2,3,0,0\n"
    "Depression,2,4,207,0,19,0\n"
    "PTSD,7,4,1,29,0,0\n"
    "Suicidal,1,0,14,0,69,0\n"
    "None,1,0,2,0,0,68\n";

inline const char* kFiveClassCsv =
    "true\\pred,Anxiety,Depression,PTSD,Suicidal,None\n"
    "Anxiety,35,3,2,2,0\n"
    "Depression,3,207,0,22,0\n"
    "PTSD,4,2,34,0,1\n"
    "Suicidal,1,13,0,70,0\n"
    "None,1,0,0,2,68\n";

inline mhc::ConfusionMatrix parse_cm(const char* csv) {
    std::istringstream in(csv);
    return mhc::ConfusionMatrix::from_csv(in);
}

/// Expands a confusion matrix into aligned (true, predicted) label sequences.
inline void expand(const mhc::ConfusionMatrix& cm, std::vector<mhc::ClassLabel>& truth,
                   std::vector<mhc::ClassLabel>& pred) {
    for (std::size_t i = 0; i < cm.size(); ++i)
        for (std::size_t j = 0; j < cm.size(); ++j)
            for (std::int64_t c = 0; c < cm.counts[i][j]; ++c) {
                truth.push_back(cm.label_order[i]);
                pred.push_back(cm.label_order[j]);
            }
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    auto p = std::filesystem::temp_directory_path() /
             ("mhc-test-" + tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Posts whose words come from disjoint per-class vocabularies, plus a few shared filler words.
inline mhc::Corpus disjoint_corpus(std::size_t per_class, std::uint64_t seed,
                                   const std::vector<mhc::ClassLabel>& labels = {mhc::kAllLabels.begin(),
                                                                                 mhc::kAllLabels.end()}) {
    std::mt19937_64 rng(seed);
    mhc::Corpus c;
    c.name = "synthetic";
    const std::vector<std::string> filler = {"the", "and", "today", "really", "just"};
    for (auto label : labels) {
        std::vector<std::string> vocab;
        for (int w = 0; w < 12; ++w)
            vocab.push_back(std::string(mhc::to_string(label)).substr(0, 3) + "w" + std::to_string(w));
        for (std::size_t i = 0; i < per_class; ++i) {
            std::string text;
            const std::size_t len = 10 + rng() % 8;
            for (std::size_t t = 0; t < len; ++t) {
                if (!text.empty()) text += ' ';
                text += (rng() % 4 == 0) ? filler[rng() % filler.size()] : vocab[rng() % vocab.size()];
            }
            const std::string id = std::string(mhc::to_string(label)) + "-" + std::to_string(i);
            c.posts.push_back(mhc::Post::make(id, text, label, "synthetic"));
        }
    }
    return c;
}

}  // namespace fixtures
