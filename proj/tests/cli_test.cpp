#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "treescheme/tree.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Cmd {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("treescheme_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Runs the installed binary in `dir` with stdout/stderr captured to files.
Cmd run_bin(const fs::path& dir, const std::string& args,
            const std::string& env_prefix = "") {
    fs::path out_file = dir / "_stdout.txt";
    fs::path err_file = dir / "_stderr.txt";
    std::string command = "cd " + dir.string() + " && " + env_prefix + TS_CLI_BIN + " " +
                          args + " >" + out_file.string() + " 2>" + err_file.string();
    int status = std::system(command.c_str());
    Cmd result;
    if (WIFEXITED(status)) result.code = WEXITSTATUS(status);
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

std::string data(const std::string& name) {
    return (fs::path(TS_DATA_DIR) / name).string();
}

std::string common_gateway() {
    return " --provider " + data("provider_mock.json") + " --prices " +
           data("prices.json") + " --templates " + std::string(TS_TEMPLATES_DIR);
}

}  // namespace

TEST_CASE("subset derives a top-level taxonomy and writes a manifest") {
    auto dir = fresh_dir("subset");
    auto result = run_bin(dir, "subset --taxonomy " + data("taxonomy.csv") +
                                   " --mode top-level --definitions " +
                                   data("top_level_definitions.csv") + " -o subset.json");
    CAPTURE(result.err);
    REQUIRE(result.code == 0);

    json doc = json::parse(slurp(dir / "subset.json"));
    REQUIRE(doc["classes"].size() == 2);
    CHECK(doc["classes"][0]["name"] == "Open");
    CHECK(doc["classes"][1]["name"] == "React");

    json manifest = json::parse(slurp(dir / "subset.json.manifest.json"));
    CHECK(manifest["command"] == "subset");
    REQUIRE(manifest["inputs"].size() >= 1);
    for (const auto& [path, digest] : manifest["inputs"].items())
        CHECK(digest.get<std::string>().size() == 64);
    CHECK(manifest["outputs"].size() == 1);
}

TEST_CASE("subset top-k keeps the most frequent classes") {
    auto dir = fresh_dir("subset_topk");
    auto result = run_bin(dir, "subset --taxonomy " + data("taxonomy.csv") +
                                   " --mode top-k --k 2 -o top2.json");
    CAPTURE(result.err);
    REQUIRE(result.code == 0);
    json doc = json::parse(slurp(dir / "top2.json"));
    REQUIRE(doc["classes"].size() == 2);
    CHECK(doc["classes"][0]["name"] == "Open.Ask");
    CHECK(doc["classes"][1]["name"] == "React.Agree");
}

TEST_CASE("build, annotate, evaluate, report walkthrough on the mock corpus") {
    auto dir = fresh_dir("pipeline");

    auto build = run_bin(dir, "build --taxonomy " + data("taxonomy.csv") +
                                  " --approach yes-no" + common_gateway() +
                                  " -o tree.json");
    CAPTURE(build.err);
    REQUIRE(build.code == 0);

    auto tree = treescheme::load_tree((dir / "tree.json").string());
    CHECK(tree.root.question ==
          "Does the utterance start a new exchange rather than respond to one?");
    CHECK(tree.approach == treescheme::Strategy::yes_no);

    std::string audit = slurp(dir / "tree.json.audit.jsonl");
    CHECK(audit.find("\"chosen\":true") != std::string::npos);
    json ledger = json::parse(slurp(dir / "tree.json.ledger.json"));
    CHECK(ledger["records"].size() == 3);

    auto annotate = run_bin(dir, "annotate --tree tree.json --dialogs " +
                                     data("dialogs.jsonl") + common_gateway() +
                                     " -o annotations.jsonl");
    CAPTURE(annotate.err);
    REQUIRE(annotate.code == 0);
    CHECK(annotate.out.find("records: 7") != std::string::npos);

    auto evaluate = run_bin(dir,
                            "evaluate --pred annotations.jsonl --tree tree.json "
                            "--depth -o eval.json");
    CAPTURE(evaluate.err);
    REQUIRE(evaluate.code == 0);
    CHECK(evaluate.out.find("P_w") != std::string::npos);
    CHECK(evaluate.out.find("Level") != std::string::npos);

    json eval_doc = json::parse(slurp(dir / "eval.json"));
    CHECK(eval_doc["evaluation"]["n_evaluated"] == 7);
    CHECK(eval_doc["evaluation"]["r_w"].get<double>() ==
          doctest::Approx(6.0 / 7.0).epsilon(1e-9));
    CHECK(eval_doc["evaluation"]["p_w"].get<double>() ==
          doctest::Approx(6.5 / 7.0).epsilon(1e-9));
    CHECK(eval_doc["evaluation"]["f1_macro"].get<double>() ==
          doctest::Approx(10.0 / 12.0).epsilon(1e-9));
    REQUIRE(eval_doc["depth"]["levels"].size() == 2);
    CHECK(eval_doc["depth"]["levels"][0]["accuracy"].get<double>() ==
          doctest::Approx(100.0).epsilon(1e-9));
    CHECK(eval_doc["depth"]["levels"][1]["accuracy"].get<double>() ==
          doctest::Approx(600.0 / 7.0).epsilon(1e-9));
    CHECK(eval_doc["depth"]["levels"][1]["error_share"].get<double>() ==
          doctest::Approx(100.0).epsilon(1e-9));

    auto report = run_bin(dir,
                          "report --report eval.json --label run-a --report eval.json "
                          "--label run-b --consistency -o combined.json");
    CAPTURE(report.err);
    REQUIRE(report.code == 0);
    CHECK(report.out.find("run-a") != std::string::npos);
    CHECK(report.out.find("run-b") != std::string::npos);
    CHECK(report.out.find("max_delta") != std::string::npos);
    json combined = json::parse(slurp(dir / "combined.json"));
    CHECK(combined["rows"].size() == 2);
    CHECK(combined["consistency"]["max_delta"]["f1_w"].get<double>() == 0.0);
}

TEST_CASE("pipeline outputs are byte-identical across runs and parallelism") {
    auto dir = fresh_dir("determinism");
    std::string build_args = "build --taxonomy " + data("taxonomy.csv") +
                             " --approach yes-no" + common_gateway();
    REQUIRE(run_bin(dir, build_args + " -o tree_a.json").code == 0);
    REQUIRE(run_bin(dir, build_args + " -o tree_b.json").code == 0);
    CHECK(slurp(dir / "tree_a.json") == slurp(dir / "tree_b.json"));
    CHECK(slurp(dir / "tree_a.json.audit.jsonl") ==
          slurp(dir / "tree_b.json.audit.jsonl"));

    std::string annotate_args = "annotate --tree tree_a.json --dialogs " +
                                data("dialogs.jsonl") + common_gateway();
    REQUIRE(run_bin(dir, annotate_args + " --parallel 1 -o ann_1.jsonl").code == 0);
    REQUIRE(run_bin(dir, annotate_args + " --parallel 4 -o ann_4.jsonl").code == 0);
    CHECK(slurp(dir / "ann_1.jsonl") == slurp(dir / "ann_4.jsonl"));

    REQUIRE(run_bin(dir, "evaluate --pred ann_1.jsonl --tree tree_a.json --depth "
                         "--label run -o eval_1.json")
                .code == 0);
    REQUIRE(run_bin(dir, "evaluate --pred ann_4.jsonl --tree tree_a.json --depth "
                         "--label run -o eval_4.json")
                .code == 0);
    CHECK(slurp(dir / "eval_1.json") == slurp(dir / "eval_4.json"));
}

TEST_CASE("consistency runs the builder twice and diffs the trees") {
    auto dir = fresh_dir("consistency");
    auto result = run_bin(dir, "consistency --taxonomy " + data("taxonomy.csv") +
                                   " --approach yes-no --runs 2 --provider " +
                                   data("provider_mock.json") + " --provider " +
                                   data("provider_mock.json") + " --prices " +
                                   data("prices.json") + " --templates " +
                                   std::string(TS_TEMPLATES_DIR) + " -o runs");
    CAPTURE(result.err);
    REQUIRE(result.code == 0);
    CHECK(result.out.find("trees identical") != std::string::npos);
    CHECK(fs::exists(dir / "runs" / "tree_1.json"));
    CHECK(fs::exists(dir / "runs" / "tree_2.json"));
    CHECK(fs::exists(dir / "runs" / "audit_2.jsonl"));
    json doc = json::parse(slurp(dir / "runs" / "consistency.json"));
    CHECK(doc["diff"]["identical"] == true);
    CHECK(slurp(dir / "runs" / "tree_1.json") == slurp(dir / "runs" / "tree_2.json"));
}

TEST_CASE("config file supplies defaults and flags override them") {
    auto dir = fresh_dir("config");
    std::ofstream(dir / "cfg.toml") << "[subset]\nk=3\n";

    auto from_config = run_bin(dir, "--config cfg.toml subset --taxonomy " +
                                        data("taxonomy.csv") +
                                        " --mode top-k -o s3.json");
    CAPTURE(from_config.err);
    REQUIRE(from_config.code == 0);
    CHECK(json::parse(slurp(dir / "s3.json"))["classes"].size() == 3);

    auto flag_wins = run_bin(dir, "--config cfg.toml subset --taxonomy " +
                                      data("taxonomy.csv") +
                                      " --mode top-k --k 2 -o s2.json");
    CAPTURE(flag_wins.err);
    REQUIRE(flag_wins.code == 0);
    CHECK(json::parse(slurp(dir / "s2.json"))["classes"].size() == 2);
}

TEST_CASE("runtime failures emit machine-readable stderr json and exit 1") {
    auto dir = fresh_dir("errors");
    auto result = run_bin(dir, "build --taxonomy " + data("taxonomy.csv") +
                                   " --approach yes-no --provider missing_provider.json "
                                   "--templates " +
                                   std::string(TS_TEMPLATES_DIR) + " -o tree.json");
    CHECK(result.code == 1);
    json doc = json::parse(result.err);
    CHECK(doc["error"]["code"] == "io_error");
    CHECK(doc["error"]["message"].get<std::string>().find("missing_provider.json") !=
          std::string::npos);
}

TEST_CASE("missing credential environment variable exits 2 without network") {
    auto dir = fresh_dir("auth");
    auto result = run_bin(dir,
                          "build --taxonomy " + data("taxonomy.csv") +
                              " --approach yes-no --provider " +
                              data("provider_openai.json") + " --templates " +
                              std::string(TS_TEMPLATES_DIR) + " -o tree.json",
                          "env -u OPENAI_API_KEY ");
    CHECK(result.code == 2);
    json doc = json::parse(result.err);
    CHECK(doc["error"]["code"] == "auth_error");
    CHECK(doc["error"]["message"].get<std::string>().find("OPENAI_API_KEY") !=
          std::string::npos);
}

TEST_CASE("bad usage is rejected before any work happens") {
    auto dir = fresh_dir("usage");
    CHECK(run_bin(dir, "").code != 0);
    CHECK(run_bin(dir, "prune --taxonomy x").code != 0);
    auto missing = run_bin(dir, "evaluate --pred does_not_exist.jsonl -o eval.json");
    CHECK(missing.code != 0);
    CHECK_FALSE(fs::exists(dir / "eval.json"));
}
