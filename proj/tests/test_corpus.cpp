#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "mhc/corpus.hpp"
#include "mhc/labels.hpp"
#include "mhc/text.hpp"

using namespace mhc;

namespace {

std::string words(std::size_t n, const std::string& stem = "w") {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + stem + std::to_string(i);
    return s;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("labels serialize in canonical order") {
    CHECK(kAllLabels.size() == 6);
    std::vector<std::string> names;
    for (auto l : kAllLabels) names.emplace_back(to_string(l));
    CHECK(names == std::vector<std::string>{"Stress", "Anxiety", "Depression", "PTSD", "Suicidal", "None"});
    for (auto l : kAllLabels) CHECK(parse_label(to_string(l)) == l);
    CHECK_FALSE(parse_label("depression").has_value());
    CHECK(parse_label_ci("depression") == ClassLabel::Depression);
    CHECK(parse_label_ci("ptsd") == ClassLabel::PTSD);
    CHECK_THROWS_AS(label_from_string("Bipolar"), ValidationError);
}

TEST_CASE("label sets keep canonical order") {
    auto s = LabelSet::from_names({"None", "Anxiety", "Suicidal"});
    CHECK(s.names() == std::vector<std::string>{"Anxiety", "Suicidal", "None"});
    CHECK(s.index_of(ClassLabel::None) == 2);
    CHECK_FALSE(s.find(ClassLabel::Stress).has_value());
    CHECK_THROWS_AS(s.index_of(ClassLabel::Stress), ValidationError);
}

TEST_CASE("word_count counts maximal non-whitespace runs") {
    CHECK(word_count("") == 0);
    CHECK(word_count("a  b\tc") == 3);
    CHECK(word_count("   ") == 0);
    CHECK(word_count(words(400)) == 400);
    CHECK(word_count("line\none\r\ntwo") == 3);
}

TEST_CASE("normalize_text folds case and collapses whitespace") {
    CHECK(normalize_text("  Hello\t\tWORLD \n") == "hello world");
    CHECK(normalize_text("") == "");
}

TEST_CASE("tokenizer splits words and punctuation") {
    CHECK(tokenize_words("I can't sleep, again!") ==
          std::vector<std::string>{"i", "can't", "sleep", ",", "again", "!"});
    CHECK(content_words("I can't sleep, again!") == std::vector<std::string>{"i", "can't", "sleep", "again"});
    CHECK(is_punctuation_token("!"));
    CHECK_FALSE(is_punctuation_token("a"));
}

TEST_CASE("curate applies word bounds inclusively") {
    std::vector<Post> posts = {Post::make("a", words(9), ClassLabel::Stress, "t"),
                               Post::make("b", words(10), ClassLabel::Stress, "t"),
                               Post::make("c", words(400), ClassLabel::Depression, "t"),
                               Post::make("d", words(401), ClassLabel::Depression, "t")};
    auto c = curate(posts);
    REQUIRE(c.size() == 2);
    CHECK(c.posts[0].id == "b");
    CHECK(c.posts[1].id == "c");
}

TEST_CASE("curate drops case-insensitive duplicates keeping the first") {
    const std::string base = words(12);
    std::string upper = base;
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    std::vector<Post> posts = {Post::make("first", base, ClassLabel::Anxiety, "t"),
                               Post::make("second", "  " + upper + "  ", ClassLabel::Stress, "t")};
    auto c = curate(posts);
    REQUIRE(c.size() == 1);
    CHECK(c.posts[0].id == "first");
}

TEST_CASE("curate is idempotent and respects bounds on random corpora") {
    std::mt19937_64 rng(7);
    std::vector<Post> posts;
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = rng() % 30;
        posts.push_back(Post::make("p" + std::to_string(i), words(n, std::to_string(rng() % 3)),
                                   kAllLabels[rng() % 6], "fuzz"));
    }
    CurationBounds b{5, 20};
    auto once = curate(posts, b);
    auto twice = curate(once.posts, b);
    CHECK(once.posts == twice.posts);
    std::set<std::string> seen;
    for (const auto& p : once.posts) {
        CHECK(p.word_count >= 5);
        CHECK(p.word_count <= 20);
        CHECK(seen.insert(normalize_text(p.text)).second);
    }
}

TEST_CASE("load_source maps a fixed label") {
    auto dir = fixtures::temp_dir("load");
    fixtures::write_file(dir / "s.csv", "text,other\n\"first post, with comma\",x\nsecond post,y\nthird,z\n");
    SourceConfig cfg;
    cfg.path = dir / "s.csv";
    cfg.format = SourceFormat::Csv;
    cfg.source_tag = "sw";
    cfg.fixed_label = ClassLabel::Suicidal;
    auto r = load_source(cfg);
    REQUIRE(r.posts.size() == 3);
    for (const auto& p : r.posts) CHECK(p.label == ClassLabel::Suicidal);
    CHECK(r.posts[0].text == "first post, with comma");
    CHECK(r.posts[0].id == "sw-0");
    CHECK(r.posts[2].id == "sw-2");
}

TEST_CASE("load_source skips empty text and counts it") {
    auto dir = fixtures::temp_dir("load");
    fixtures::write_file(dir / "s.jsonl", "{\"text\": \"hello there\"}\n{\"text\": \"   \"}\n{\"text\": \"bye now\"}\n");
    SourceConfig cfg;
    cfg.path = dir / "s.jsonl";
    cfg.source_tag = "x";
    cfg.fixed_label = ClassLabel::None;
    auto r = load_source(cfg);
    CHECK(r.posts.size() == 2);
    CHECK(r.skipped_empty == 1);
    CHECK(r.posts[1].id == "x-2");
}

TEST_CASE("load_source derives labels from a column with a map and filters") {
    auto dir = fixtures::temp_dir("load");
    fixtures::write_file(dir / "sad.jsonl",
                         "{\"id\": \"r1\", \"body\": \"nightmares again\", \"subreddit\": \"ptsd\"}\n"
                         "{\"id\": \"r2\", \"body\": \"panic at work\", \"subreddit\": \"Anxiety\"}\n"
                         "{\"id\": \"r3\", \"body\": \"flashbacks\", \"subreddit\": \"ptsd\"}\n"
                         "{\"id\": \"r4\", \"body\": \"lovely day\", \"subreddit\": \"aww\"}\n"
                         "{\"id\": \"r5\", \"body\": \"cannot breathe\", \"subreddit\": \"Anxiety\"}\n");
    auto cfg = SourceConfig::from_json(nlohmann::json::parse(R"({
        "path": "sad.jsonl", "source": "sad", "text_field": "body", "id_field": "id",
        "label_field": "subreddit", "label_map": {"ptsd": "PTSD"},
        "exclude": {"subreddit": ["aww"]}
    })"),
                                       dir);
    auto r = load_source(cfg);
    REQUIRE(r.posts.size() == 4);
    CHECK(r.filtered == 1);
    CHECK(r.posts[0].id == "r1");
    CHECK(r.posts[0].label == ClassLabel::PTSD);
    CHECK(r.posts[1].label == ClassLabel::Anxiety);
    CHECK(r.posts[2].label == ClassLabel::PTSD);
}

TEST_CASE("load_source errors") {
    SourceConfig cfg;
    cfg.path = "/nonexistent/file.jsonl";
    cfg.fixed_label = ClassLabel::None;
    CHECK_THROWS_AS(load_source(cfg), IoError);

    auto dir = fixtures::temp_dir("load");
    fixtures::write_file(dir / "bad.jsonl", "{\"text\": \"hi there\", \"label\": \"Bipolar\"}\n");
    SourceConfig c2;
    c2.path = dir / "bad.jsonl";
    c2.label_field = "label";
    CHECK_THROWS_AS(load_source(c2), ValidationError);

    CHECK_THROWS_AS(SourceConfig::from_json(nlohmann::json::parse(R"({"path": "x"})")), ValidationError);
    CHECK_THROWS_AS(SourceConfig::from_json(nlohmann::json::parse(R"({"path": "x", "label": "None", "format": "xml"})")),
                    ValidationError);
}

TEST_CASE("stats uses lower-middle medians and reports every class") {
    Corpus c;
    for (auto [id, n] : std::vector<std::pair<std::string, std::size_t>>{{"a", 10}, {"b", 26}, {"c", 310}})
        c.posts.push_back(Post::make(id, words(n), ClassLabel::Stress, "t"));
    for (auto [id, n] : std::vector<std::pair<std::string, std::size_t>>{{"d", 12}, {"e", 40}, {"f", 30}, {"g", 20}})
        c.posts.push_back(Post::make(id, words(n), ClassLabel::Anxiety, "t"));
    auto s = stats(c);
    REQUIRE(s.rows.size() == 6);
    const auto& st = s.row(ClassLabel::Stress);
    CHECK(st.count == 3);
    CHECK(st.min_words == 10u);
    CHECK(st.max_words == 310u);
    CHECK(st.median_words == 26u);
    CHECK(s.row(ClassLabel::Anxiety).median_words == 20u);  // sorted 12,20,30,40
    CHECK(s.row(ClassLabel::None).count == 0);
    CHECK_FALSE(s.row(ClassLabel::None).median_words.has_value());
    CHECK(s.total() == c.size());
    CHECK(s.to_markdown().rfind("| Class | Count | Min Words | Max Words | Median Words |", 0) == 0);

    auto empty = stats(Corpus{});
    CHECK(empty.total() == 0);
    CHECK(empty.to_json()["classes"].size() == 6);
}

TEST_CASE("stats counts sum to corpus size on random corpora") {
    auto c = fixtures::disjoint_corpus(17, 3);
    c.posts.resize(77);
    CHECK(stats(c).total() == 77);
}

TEST_CASE("stratified split of a balanced corpus") {
    Corpus c;
    for (int i = 0; i < 50; ++i) c.posts.push_back(Post::make("a" + std::to_string(i), words(12), ClassLabel::Stress, "t"));
    for (int i = 0; i < 50; ++i) c.posts.push_back(Post::make("b" + std::to_string(i), words(12), ClassLabel::None, "t"));
    SplitSpec spec;
    auto s = split(c, spec);
    CHECK(s.train.size() == 80);
    CHECK(s.val.size() == 10);
    CHECK(s.test.size() == 10);
    for (const Corpus* part : {&s.train, &s.val, &s.test}) {
        auto n = std::count_if(part->posts.begin(), part->posts.end(),
                               [](const Post& p) { return p.label == ClassLabel::Stress; });
        CHECK(static_cast<std::size_t>(n) * 2 == part->size());
    }
    auto again = split(c, spec);
    CHECK(again.train.ids() == s.train.ids());
    CHECK(again.test.ids() == s.test.ids());

    std::set<std::string> all;
    for (const Corpus* part : {&s.train, &s.val, &s.test})
        for (const auto& id : part->ids()) CHECK(all.insert(id).second);
    CHECK(all.size() == c.size());
}

TEST_CASE("stratified proportions stay within one item of the fractions") {
    auto c = fixtures::disjoint_corpus(37, 11);
    SplitSpec spec{0.7, 0.15, 0.15, 5, true};
    auto s = split(c, spec);
    for (auto l : kAllLabels) {
        auto count = [l](const Corpus& x) {
            return static_cast<double>(std::count_if(x.posts.begin(), x.posts.end(), [l](const Post& p) { return p.label == l; }));
        };
        CHECK(std::abs(count(s.train) - 37 * 0.7) <= 1.0);
        CHECK(std::abs(count(s.val) - 37 * 0.15) <= 1.0);
        CHECK(std::abs(count(s.test) - 37 * 0.15) <= 1.0);
    }
}

TEST_CASE("split preconditions") {
    SplitSpec bad{0.5, 0.2, 0.2, 1, true};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    Corpus c;
    for (int i = 0; i < 10; ++i) c.posts.push_back(Post::make("a" + std::to_string(i), words(12), ClassLabel::Stress, "t"));
    c.posts.push_back(Post::make("p0", words(12), ClassLabel::PTSD, "t"));
    c.posts.push_back(Post::make("p1", words(12), ClassLabel::PTSD, "t"));
    try {
        split(c, SplitSpec{});
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("PTSD") != std::string::npos);
    }
}

TEST_CASE("filter_classes") {
    auto c = fixtures::disjoint_corpus(5, 1);
    auto f = filter_classes(c, {ClassLabel::Stress});
    auto s = stats(f);
    CHECK(s.row(ClassLabel::Stress).count == 0);
    CHECK(s.row(ClassLabel::Depression).count == 5);
    CHECK(filter_classes(c, {}).posts == c.posts);
    CHECK(filter_classes(c, {ClassLabel::Stress, ClassLabel::None}).label_set().size() == 4);
    CHECK_THROWS_AS(filter_classes(c, {kAllLabels.begin(), kAllLabels.end()}), ValidationError);
}

TEST_CASE("JSONL round trip and duplicate ids") {
    auto dir = fixtures::temp_dir("jsonl");
    auto c = fixtures::disjoint_corpus(4, 2);
    write_corpus_jsonl(c, dir / "c.jsonl");
    auto back = read_corpus_jsonl(dir / "c.jsonl", c.name);
    CHECK(back.posts == c.posts);
    const auto line = post_to_json(c.posts[0]).dump() + "\n";
    fixtures::write_file(dir / "dup.jsonl", line + line);
    CHECK_THROWS_AS(read_corpus_jsonl(dir / "dup.jsonl"), ValidationError);
}

}  // TEST_SUITE
