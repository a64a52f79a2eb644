#include "doctest.h"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "mhc/cli.hpp"
#include "stubs.hpp"

using namespace mhc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

json error_of(const Outcome& o) {
    auto line = o.err.substr(0, o.err.find('\n'));
    return json::parse(line).at("error");
}

fs::path only_run(const fs::path& root, const std::string& sub) {
    fs::path found;
    int n = 0;
    for (const auto& e : fs::directory_iterator(root))
        if (e.path().filename().string().find("-" + sub) != std::string::npos) {
            found = e.path();
            ++n;
        }
    REQUIRE(n == 1);
    return found;
}

json manifest_of(const fs::path& dir) { return json::parse(fixtures::read_file(dir / "manifest.json")); }

/// Raw per-class dumps plus a config that ingests them into `root/runs`.
fs::path write_project(const fs::path& root, std::size_t per_class, const std::vector<ClassLabel>& labels) {
    auto corpus = fixtures::disjoint_corpus(per_class, 77, labels);
    json sources = json::array();
    for (auto l : labels) {
        const std::string name(to_string(l));
        std::string lines;
        for (const auto& p : corpus.posts)
            if (p.label == l) lines += json{{"body", p.text}}.dump() + "\n";
        fixtures::write_file(root / "raw" / (name + ".jsonl"), lines);
        sources.push_back({{"path", "raw/" + name + ".jsonl"}, {"label", name}, {"text_field", "body"}});
    }
    json cfg = {{"output_root", "runs"},
                {"ingest", {{"sources", sources}, {"split", {{"train", 0.6}, {"val", 0.2}, {"test", 0.2}, {"seed", 3}}}}},
                {"embedding", {{"encoder", "hashing"}, {"dim", 32}}},
                {"finetune", {{"epochs_max", 3}, {"patience", 1}, {"dim", 8}, {"ffn_dim", 8}, {"max_sequence_tokens", 32}}},
                {"explain", {{"steps", 16}, {"max_samples", 2}, {"phrases", {{"k", 3}}}}}};
    fixtures::write_file(root / "config.json", cfg.dump(2));
    return root / "config.json";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage and argument errors exit with 2") {
    auto none = run({});
    CHECK(none.code == 2);
    CHECK(none.err.find("usage: mhc") != std::string::npos);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"evaluate", "--no-such-flag"}).code == 2);
    CHECK(run({"evaluate", "--config", "/does/not/exist.json"}).code == 2);
}

TEST_CASE("config errors name the offending field") {
    auto dir = fixtures::temp_dir("cli");
    fixtures::write_file(dir / "bad.json", R"({"output_root": "runs", "trainer": {}})");
    auto o = run({"evaluate", "--config", (dir / "bad.json").string()});
    CHECK(o.code == 2);
    CHECK(error_of(o)["kind"] == "config");
    CHECK(error_of(o)["field"] == "trainer");

    fixtures::write_file(dir / "bad2.json", R"({"output_root": "runs", "finetune": {"epochs_max": 2, "patience": 5}})");
    auto o2 = run({"finetune", "--config", (dir / "bad2.json").string(), "--train", "x.jsonl"});
    CHECK(o2.code == 2);
    CHECK(error_of(o2)["field"] == "finetune.patience");

    fixtures::write_file(dir / "bad3.json", "{not json");
    CHECK(run({"evaluate", "--config", (dir / "bad3.json").string()}).code == 2);
    CHECK(!fs::exists(dir / "runs"));
}

TEST_CASE("evaluate prints metrics and completes its manifest") {
    auto dir = fixtures::temp_dir("cli");
    fixtures::write_file(dir / "cm.csv", fixtures::kSixClassCsv);
    auto o = run({"evaluate", "--runs", (dir / "runs").string(), "--confusion", (dir / "cm.csv").string()});
    REQUIRE(o.code == 0);
    auto m = json::parse(o.out);
    CHECK(std::abs(m["macro"]["f1"].get<double>() - 0.839) <= 0.002);
    auto rd = only_run(dir / "runs", "evaluate");
    auto man = manifest_of(rd);
    CHECK(man["status"] == "completed");
    CHECK(man["subcommand"] == "evaluate");
    CHECK(man["input_hashes"].size() == 1);
    CHECK(man["input_hashes"].begin()->get<std::string>().size() == 64);
    for (const char* f : {"confusion.csv", "metrics.json", "metrics.md"}) CHECK(fs::exists(rd / f));

    // A second run never reuses the first directory.
    REQUIRE(run({"evaluate", "--runs", (dir / "runs").string(), "--confusion", (dir / "cm.csv").string()}).code == 0);
    std::size_t runs = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "runs")) ++runs;
    CHECK(runs == 2);
    CHECK(fs::exists(rd / "metrics.json"));
}

TEST_CASE("evaluate from predictions with Unknown answers") {
    auto dir = fixtures::temp_dir("cli");
    fixtures::write_file(dir / "p.jsonl",
                         "{\"gold\": \"Stress\", \"predicted\": \"Stress\"}\n"
                         "{\"gold\": \"None\", \"predicted\": \"Unknown\"}\n"
                         "{\"gold\": \"None\", \"predicted\": \"None\"}\n");
    auto o = run({"evaluate", "--runs", (dir / "runs").string(), "--predictions", (dir / "p.jsonl").string()});
    REQUIRE(o.code == 0);
    auto m = json::parse(o.out);
    CHECK(m["unknown_count"] == 1);
    CHECK(m["accuracy"].get<double>() == doctest::Approx(2.0 / 3));
}

TEST_CASE("runtime failures exit with 1 and mark the run failed") {
    auto dir = fixtures::temp_dir("cli");
    fixtures::write_file(dir / "train.jsonl", "");
    auto o = run({"finetune", "--runs", (dir / "runs").string(), "--train", (dir / "train.jsonl").string()});
    CHECK(o.code == 1);
    CHECK(error_of(o)["message"].get<std::string>().find("validation split required") != std::string::npos);
    auto rd = only_run(dir / "runs", "finetune");
    CHECK(manifest_of(rd)["status"] == "failed");

    auto missing = run({"evaluate", "--runs", (dir / "runs").string(), "--confusion", (dir / "nope.csv").string()});
    CHECK(missing.code == 1);
    CHECK(error_of(missing)["kind"] == "io");
}

TEST_CASE("end-to-end pipeline and report") {
    auto dir = fixtures::temp_dir("e2e");
    const auto cfg = write_project(dir, 20, {ClassLabel::Depression, ClassLabel::Suicidal, ClassLabel::None});
    const std::string c = cfg.string();

    auto ingest = run({"ingest", "--config", c});
    REQUIRE(ingest.code == 0);
    const auto in_dir = only_run(dir / "runs", "ingest");
    for (const char* f : {"corpus.jsonl", "train.jsonl", "val.jsonl", "test.jsonl", "stats.json", "stats.md"})
        CHECK(fs::exists(in_dir / f));
    const auto train = (in_dir / "train.jsonl").string(), val = (in_dir / "val.jsonl").string(),
               test = (in_dir / "test.jsonl").string();
    CHECK(read_corpus_jsonl(in_dir / "test.jsonl").size() == 12);

    REQUIRE(run({"explore", "--config", c, "--corpus", (in_dir / "corpus.jsonl").string()}).code == 0);
    const auto ex_dir = only_run(dir / "runs", "explore");
    for (const char* f : {"embeddings.bin", "cluster.json", "centroids.md", "projection.jsonl", "projection.svg"})
        CHECK(fs::exists(ex_dir / f));

    REQUIRE(run({"train-linear", "--config", c, "--train", train, "--test", test}).code == 0);
    const auto lin = only_run(dir / "runs", "train-linear");
    REQUIRE(run({"train-linear", "--config", c, "--train", train, "--test", test, "--runs",
                 (dir / "again").string()})
                .code == 0);
    const auto lin2 = only_run(dir / "again", "train-linear");
    CHECK(fixtures::read_file(lin / "metrics.json") == fixtures::read_file(lin2 / "metrics.json"));
    CHECK(fixtures::read_file(lin / "predictions.jsonl") == fixtures::read_file(lin2 / "predictions.jsonl"));

    auto ft = run({"finetune", "--config", c, "--train", train, "--val", val, "--test", test});
    REQUIRE(ft.code == 0);
    const auto ft_dir = only_run(dir / "runs", "finetune");
    CHECK(fs::exists(ft_dir / "checkpoint" / "model.bin"));
    CHECK(manifest_of(ft_dir)["seeds"].contains("finetune"));

    auto ex = run({"explain", "--config", c, "--checkpoint", (ft_dir / "checkpoint").string(), "--test", test});
    REQUIRE(ex.code == 0);
    const auto xp = only_run(dir / "runs", "explain");
    CHECK(fs::exists(xp / "index.html"));
    CHECK(fs::exists(xp / "drivers.md"));
    CHECK(manifest_of(xp)["status"] == "completed");

    auto rep = run({"report", "--config", c});
    REQUIRE(rep.code == 0);
    const auto report = fixtures::read_file(only_run(dir / "runs", "report") / "report.md");
    for (const char* h : {"## Corpus statistics", "## Embedding space", "## Model comparison", "## Attribution drivers",
                          "## Key phrases"})
        CHECK(report.find(h) != std::string::npos);
}

TEST_CASE("prompt subcommand against a local endpoint") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        if (req.get_header_value("Authorization") != "Bearer cli-secret") {
            res.status = 401;
            return;
        }
        const auto body = json::parse(req.body);
        std::string out;
        for (const auto& item : stubs::prompt_items(body["messages"][0]["content"].get<std::string>()))
            out += format_schema_line(item.id, item.id.rfind("Dep", 0) == 0 ? "Depression" : "Unknown", item.text) + "\n";
        res.set_content(json{{"choices", {{{"message", {{"content", out}}}}}}}.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto dir = fixtures::temp_dir("cli-prompt");
    auto corpus = fixtures::disjoint_corpus(3, 1, {ClassLabel::Depression, ClassLabel::None});
    write_corpus_jsonl(corpus, dir / "test.jsonl");
    json cfg = {{"output_root", "runs"},
                {"prompt", {{"provider", "custom"}, {"api_key_env", "MHC_CLI_TEST_KEY"}, {"backoff_ms", 1}}}};
    fixtures::write_file(dir / "config.json", cfg.dump());
    const std::vector<std::string> args = {"prompt", "--config", (dir / "config.json").string(), "--test",
                                           (dir / "test.jsonl").string(), "--base-url",
                                           "http://127.0.0.1:" + std::to_string(port)};

    ::unsetenv("MHC_CLI_TEST_KEY");
    auto no_key = run(args);
    CHECK(no_key.code == 1);
    CHECK(error_of(no_key)["kind"] == "auth");

    ::setenv("MHC_CLI_TEST_KEY", "wrong", 1);
    CHECK(error_of(run(args))["kind"] == "auth");

    ::setenv("MHC_CLI_TEST_KEY", "cli-secret", 1);
    auto ok = run(args);
    server.stop();
    t.join();
    ::unsetenv("MHC_CLI_TEST_KEY");
    REQUIRE(ok.code == 0);
    auto m = json::parse(ok.out);
    CHECK(m["unknown_count"] == 3);
    CHECK(m["failed_batches"] == 0);
    fs::path rd;
    for (const auto& e : fs::directory_iterator(dir / "runs"))
        if (manifest_of(e.path())["status"] == "completed") rd = e.path();
    REQUIRE(!rd.empty());
    CHECK(fs::exists(rd / "prompts" / "batch-0000.txt"));
    CHECK(fixtures::read_file(rd / "manifest.json").find("cli-secret") == std::string::npos);
}

}  // TEST_SUITE
