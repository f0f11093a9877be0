#include "treescheme/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "CLI11.hpp"

#include "treescheme/annotator.hpp"
#include "treescheme/builder.hpp"
#include "treescheme/evaluator.hpp"
#include "treescheme/manifest.hpp"
#include "treescheme/providers.hpp"

namespace treescheme {

namespace {

using nlohmann::ordered_json;

void emit_error(std::ostream& err, const std::string& code, const std::string& message) {
    ordered_json doc;
    doc["error"] = {{"code", code}, {"message", message}};
    err << doc.dump() << "\n";
}

std::string default_templates_dir() {
    if (const char* env = std::getenv("TREESCHEME_TEMPLATES"); env && *env) return env;
    return "templates/default";
}

DialogFormat dialog_format_for(const std::string& flag,
                               const std::filesystem::path& path) {
    if (flag == "jsonl") return DialogFormat::jsonl;
    if (flag == "swda-csv") return DialogFormat::swda_csv;
    if (!flag.empty()) throw ConfigError("unknown dialog format: " + flag);
    return path.extension() == ".csv" ? DialogFormat::swda_csv : DialogFormat::jsonl;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

struct GatewayFlags {
    std::string provider_path;
    std::string prices_path;
    double max_spend = 0.0;
    bool max_spend_set = false;
    int max_concurrent = 4;
};

struct Session {
    ProviderConfig provider_config;
    std::shared_ptr<ChatGateway> gateway;
};

Session open_session(const GatewayFlags& flags) {
    Session session;
    session.provider_config = load_provider_config(flags.provider_path);
    GatewayOptions options;
    options.max_concurrent = flags.max_concurrent;
    if (flags.max_spend_set) options.spend_cap = flags.max_spend;
    if (!flags.prices_path.empty()) options.prices = load_price_table(flags.prices_path);
    session.gateway = std::make_shared<ChatGateway>(make_provider(session.provider_config),
                                                    options);
    return session;
}

void add_digest(std::map<std::string, std::string>& digests, const std::string& path) {
    if (!path.empty() && std::filesystem::exists(path))
        digests[path] = sha256_file(path);
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) err << "warning: " << w << "\n";
}

// --- subset ---

struct SubsetOpts {
    std::string taxonomy;
    std::string mode;
    int k = 0;
    std::string definitions;
    std::string out;
};

int cmd_subset(const SubsetOpts& opts, std::ostream& out, std::ostream&) {
    TaxonomySpec taxonomy =
        load_taxonomy(opts.taxonomy, taxonomy_format_from_extension(opts.taxonomy));
    DefinitionTable defs;
    if (!opts.definitions.empty()) defs = load_definitions(opts.definitions);

    TaxonomySpec derived;
    if (opts.mode == "top-level") {
        derived = subset_top_level(taxonomy, defs);
    } else if (opts.mode == "top-two") {
        derived = subset_prefix_levels(taxonomy, 2, defs);
    } else if (opts.mode == "top-k") {
        if (opts.k < 1) throw ConfigError("--k must be >= 1 for top-k mode");
        derived = subset_top_k_frequent(taxonomy, opts.k);
    } else {
        throw ConfigError("unknown subset mode: " + opts.mode);
    }
    save_taxonomy(derived, opts.out, taxonomy_format_from_extension(opts.out));

    RunManifest manifest;
    manifest.command = "subset";
    manifest.created_at = utc_timestamp_now();
    manifest.config = {{"taxonomy", opts.taxonomy},
                       {"mode", opts.mode},
                       {"k", opts.k},
                       {"definitions", opts.definitions},
                       {"out", opts.out}};
    add_digest(manifest.inputs, opts.taxonomy);
    add_digest(manifest.inputs, opts.definitions);
    add_digest(manifest.outputs, opts.out);
    write_manifest(manifest, opts.out + ".manifest.json");

    out << "subset " << opts.mode << ": " << derived.classes.size() << " classes -> "
        << opts.out << "\n";
    return 0;
}

// --- build ---

struct BuildOpts {
    std::string taxonomy;
    std::string approach;
    GatewayFlags gateway;
    std::string judge;
    std::string templates;
    int candidates = 3;
    double temperature = 0.4;
    int max_depth = 12;
    int reasoning_pairs = 3;
    int structured_retries = 2;
    int proposal_retries = 2;
    int backtrack_budget = 25;
    bool pairwise_answers = false;
    std::string run_id;
    std::string audit;
    std::string ledger;
    std::string out;
};

BuilderConfig builder_config_from(const BuildOpts& opts, const std::string& model_id) {
    BuilderConfig config;
    config.strategy = strategy_from_string(opts.approach);
    config.model_id = model_id;
    config.temperature = opts.temperature;
    config.candidates_per_node = opts.candidates;
    config.max_depth = opts.max_depth;
    config.reasoning_pairs = opts.reasoning_pairs;
    config.prompt_template_set = opts.templates;
    config.structured_retries = opts.structured_retries;
    config.proposal_retries = opts.proposal_retries;
    config.backtrack_budget = opts.backtrack_budget;
    config.pairwise_answers = opts.pairwise_answers;
    config.run_id = opts.run_id;
    return config;
}

int cmd_build(const BuildOpts& opts, std::ostream& out, std::ostream& err) {
    auto start = std::chrono::steady_clock::now();
    TaxonomySpec taxonomy =
        load_taxonomy(opts.taxonomy, taxonomy_format_from_extension(opts.taxonomy));
    Session session = open_session(opts.gateway);

    std::shared_ptr<NliJudge> judge;
    if (!opts.judge.empty())
        judge = make_judge(load_judge_config(opts.judge), session.gateway);

    BuilderConfig config = builder_config_from(opts, session.provider_config.model_id);
    TreeBuilder builder(session.gateway, std::move(judge), config);
    DecisionTree tree = builder.build_tree(taxonomy);
    print_warnings(err, builder.warnings());

    ValidationReport validation = validate_tree(tree, taxonomy);
    for (const auto& warning : validation.warnings) err << "warning: " << warning.detail << "\n";
    if (!validation.ok())
        throw SchemaViolation("$", "built tree failed validation: " +
                                       validation.errors.front().detail);

    save_tree(tree, opts.out);
    std::string audit_path = opts.audit.empty() ? opts.out + ".audit.jsonl" : opts.audit;
    write_audit_log(builder.audit_log(), audit_path);
    std::string ledger_path = opts.ledger.empty() ? opts.out + ".ledger.json" : opts.ledger;
    session.gateway->ledger().save(ledger_path, elapsed_s(start));

    DepthStats stats = depth_stats(tree);
    auto totals = session.gateway->ledger().totals();

    RunManifest manifest;
    manifest.command = "build";
    manifest.created_at = utc_timestamp_now();
    manifest.config = {{"taxonomy", opts.taxonomy},
                       {"approach", cli_name(config.strategy)},
                       {"candidates", opts.candidates},
                       {"temperature", opts.temperature},
                       {"max_depth", opts.max_depth},
                       {"reasoning_pairs", opts.reasoning_pairs},
                       {"templates", opts.templates},
                       {"run_id", tree.builder_metadata.run_id},
                       {"out", opts.out}};
    add_digest(manifest.inputs, opts.taxonomy);
    add_digest(manifest.inputs, opts.gateway.provider_path);
    add_digest(manifest.inputs, opts.judge);
    add_digest(manifest.outputs, opts.out);
    add_digest(manifest.outputs, audit_path);
    manifest.provider_id = session.gateway->provider().id();
    manifest.model_id = session.provider_config.model_id;
    manifest.ledger_totals = totals;
    write_manifest(manifest, opts.out + ".manifest.json");

    out << "tree: " << opts.out << "\n"
        << "leaves: " << stats.per_class_depth.size() << "  max depth: " << stats.max_depth
        << "\n"
        << "calls: " << totals.calls << "  cost: $" << totals.cost << "\n";
    return 0;
}

// --- annotate ---

struct AnnotateOpts {
    std::string tree;
    std::string dialogs;
    std::string format;
    std::string taxonomy;
    GatewayFlags gateway;
    std::string templates;
    int context = 1;
    double temperature = 0.9;
    std::string match = "overlap-fallback";
    int retries = 2;
    int parallel = 1;
    bool skip_continuations = true;
    std::string ledger;
    std::string out;
};

int cmd_annotate(const AnnotateOpts& opts, std::ostream& out, std::ostream& err) {
    auto start = std::chrono::steady_clock::now();
    DecisionTree tree = load_tree(opts.tree);

    std::optional<TaxonomySpec> taxonomy;
    if (!opts.taxonomy.empty())
        taxonomy =
            load_taxonomy(opts.taxonomy, taxonomy_format_from_extension(opts.taxonomy));
    std::vector<Dialog> dialogs =
        load_dialogs(opts.dialogs, dialog_format_for(opts.format, opts.dialogs),
                     taxonomy ? &*taxonomy : nullptr);
    if (dialogs.empty()) throw EmptyInput("no dialogs in " + opts.dialogs);

    GatewayFlags gateway_flags = opts.gateway;
    gateway_flags.max_concurrent = std::max(gateway_flags.max_concurrent, opts.parallel);
    Session session = open_session(gateway_flags);

    AnnotatorConfig config;
    config.model_id = session.provider_config.model_id;
    config.temperature = opts.temperature;
    config.context_length = opts.context;
    config.answer_match = match_mode_from_string(opts.match);
    config.max_question_retries = opts.retries;
    config.skip_continuations = opts.skip_continuations;
    config.prompt_template_set = opts.templates;

    Annotator annotator(session.gateway, config);
    CorpusResult result = annotator.annotate_corpus(tree, dialogs, opts.parallel);
    write_annotations(result.records, opts.out);
    std::string ledger_path = opts.ledger.empty() ? opts.out + ".ledger.json" : opts.ledger;
    session.gateway->ledger().save(ledger_path, elapsed_s(start));

    for (const auto& e : result.errors)
        err << "warning: dialog " << e.dialog_id << ": " << e.message << "\n";

    long failed = std::count_if(result.records.begin(), result.records.end(),
                                [](const AnnotationRecord& r) { return r.failed; });
    auto totals = session.gateway->ledger().totals();

    RunManifest manifest;
    manifest.command = "annotate";
    manifest.created_at = utc_timestamp_now();
    manifest.config = {{"tree", opts.tree},
                       {"dialogs", opts.dialogs},
                       {"context", opts.context},
                       {"temperature", opts.temperature},
                       {"match", opts.match},
                       {"parallel", opts.parallel},
                       {"skip_continuations", opts.skip_continuations},
                       {"templates", opts.templates},
                       {"out", opts.out}};
    add_digest(manifest.inputs, opts.tree);
    add_digest(manifest.inputs, opts.dialogs);
    add_digest(manifest.inputs, opts.gateway.provider_path);
    add_digest(manifest.outputs, opts.out);
    manifest.provider_id = session.gateway->provider().id();
    manifest.model_id = session.provider_config.model_id;
    manifest.ledger_totals = totals;
    write_manifest(manifest, opts.out + ".manifest.json");

    out << "records: " << result.records.size() << "  failed: " << failed
        << "  dialog errors: " << result.errors.size() << "\n"
        << "calls: " << totals.calls << "  cost: $" << totals.cost << "\n";
    return result.errors.size() < dialogs.size() ? 0 : 1;
}

// --- evaluate ---

struct EvaluateOpts {
    std::string pred;
    std::string tree;
    bool depth = false;
    std::string taxonomy;
    std::string macro = "gold_present";
    std::string ledger;
    long n_dialogs = 0;
    std::string label;
    std::string out;
};

int cmd_evaluate(const EvaluateOpts& opts, std::ostream& out, std::ostream& err) {
    std::vector<AnnotationRecord> records = read_annotations(opts.pred);
    std::vector<AnnotationRecord> usable;
    for (const auto& record : records)
        if (record.gold && *record.gold != kContinuationLabel) usable.push_back(record);
    if (usable.size() < records.size())
        err << "warning: skipped " << records.size() - usable.size()
            << " records without usable gold labels\n";
    if (usable.empty()) throw EmptyInput("no gold-labeled records in " + opts.pred);

    std::optional<TaxonomySpec> taxonomy;
    if (!opts.taxonomy.empty())
        taxonomy =
            load_taxonomy(opts.taxonomy, taxonomy_format_from_extension(opts.taxonomy));
    MacroMode macro = macro_mode_from_string(opts.macro);
    EvaluationReport report = score(usable, macro, taxonomy ? &*taxonomy : nullptr);

    std::optional<DecisionTree> tree;
    if (!opts.tree.empty()) tree = load_tree(opts.tree);
    std::string label = opts.label;
    if (label.empty())
        label = tree ? cli_name(tree->approach)
                     : std::filesystem::path(opts.pred).stem().string();

    ordered_json doc;
    doc["evaluation"] = report.to_json();
    out << render_report_table({{label, report}});

    if (opts.depth) {
        if (!tree) throw ConfigError("--depth needs --tree");
        DepthReport depth = depth_analysis(*tree, usable);
        doc["depth"] = depth.to_json();
        out << "\n" << render_depth_table(depth);
    }
    if (!opts.ledger.empty()) {
        double wall = 0.0;
        UsageLedger ledger = UsageLedger::load(opts.ledger, &wall);
        long n_dialogs = opts.n_dialogs;
        if (n_dialogs == 0) {
            std::set<std::string> ids;
            for (const auto& record : usable) ids.insert(record.dialog_id);
            n_dialogs = static_cast<long>(ids.size());
        }
        CostReport cost = cost_report(ledger, n_dialogs, wall);
        doc["cost"] = cost.to_json();
        out << "\n" << render_cost_table(cost);
    }

    std::ofstream file(opts.out, std::ios::binary);
    if (!file) throw IoError("cannot write report: " + opts.out);
    file << doc.dump(2) << "\n";
    file.close();

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.created_at = utc_timestamp_now();
    manifest.config = {{"pred", opts.pred},
                       {"tree", opts.tree},
                       {"depth", opts.depth},
                       {"macro", opts.macro},
                       {"label", label},
                       {"out", opts.out}};
    add_digest(manifest.inputs, opts.pred);
    add_digest(manifest.inputs, opts.tree);
    add_digest(manifest.inputs, opts.ledger);
    add_digest(manifest.outputs, opts.out);
    write_manifest(manifest, opts.out + ".manifest.json");
    return 0;
}

// --- consistency ---

struct ConsistencyOpts {
    std::string taxonomy;
    std::string approach;
    int runs = 3;
    std::vector<std::string> providers;
    std::vector<std::string> judges;
    std::string prices;
    double max_spend = 0.0;
    bool max_spend_set = false;
    std::string templates;
    int candidates = 3;
    double temperature = 0.4;
    int max_depth = 12;
    int reasoning_pairs = 3;
    std::string run_id;
    std::string dialogs;
    std::string format;
    std::vector<std::string> annotate_providers;
    int context = 1;
    double annotate_temperature = 0.9;
    int parallel = 1;
    std::string out_dir;
};

int cmd_consistency(const ConsistencyOpts& opts, std::ostream& out, std::ostream& err) {
    TaxonomySpec taxonomy =
        load_taxonomy(opts.taxonomy, taxonomy_format_from_extension(opts.taxonomy));
    std::filesystem::create_directories(opts.out_dir);

    BuilderConfig config;
    config.strategy = strategy_from_string(opts.approach);
    config.temperature = opts.temperature;
    config.candidates_per_node = opts.candidates;
    config.max_depth = opts.max_depth;
    config.reasoning_pairs = opts.reasoning_pairs;
    config.prompt_template_set = opts.templates;
    config.run_id = opts.run_id;

    auto pick = [](const std::vector<std::string>& paths, int i) -> std::string {
        if (paths.empty()) return "";
        return paths[std::min<std::size_t>(i, paths.size() - 1)];
    };

    std::vector<std::shared_ptr<ChatGateway>> gateways;
    SessionFactory factory = [&](int i) {
        GatewayFlags flags;
        flags.provider_path = pick(opts.providers, i);
        flags.prices_path = opts.prices;
        flags.max_spend = opts.max_spend;
        flags.max_spend_set = opts.max_spend_set;
        Session session = open_session(flags);
        gateways.push_back(session.gateway);
        config.model_id = session.provider_config.model_id;
        std::shared_ptr<NliJudge> judge;
        std::string judge_path = pick(opts.judges, i);
        if (!judge_path.empty())
            judge = make_judge(load_judge_config(judge_path), session.gateway);
        return std::make_pair(session.gateway, judge);
    };

    ConsistencySuite suite = build_consistency_suite(taxonomy, config, opts.runs, factory);

    ordered_json doc;
    doc["runs"] = ordered_json::array();
    std::vector<DecisionTree> trees;
    std::filesystem::path dir(opts.out_dir);
    for (std::size_t i = 0; i < suite.runs.size(); ++i) {
        const ConsistencyRun& run = suite.runs[i];
        ordered_json jrun;
        jrun["run"] = i + 1;
        if (run.tree) {
            std::string tree_path = (dir / ("tree_" + std::to_string(i + 1) + ".json")).string();
            save_tree(*run.tree, tree_path);
            trees.push_back(*run.tree);
            jrun["tree"] = tree_path;
        } else {
            err << "warning: run " << i + 1 << " failed: " << run.error << "\n";
            jrun["error"] = run.error;
        }
        std::string audit_path =
            (dir / ("audit_" + std::to_string(i + 1) + ".jsonl")).string();
        write_audit_log(run.audit, audit_path);
        jrun["audit"] = audit_path;
        doc["runs"].push_back(std::move(jrun));
    }

    doc["diff"] = {{"identical", suite.diff.identical}};
    if (suite.diff.first_divergence_level)
        doc["diff"]["first_divergence_level"] = *suite.diff.first_divergence_level;
    ordered_json jdepths = ordered_json::object();
    for (const auto& [label, depths] : suite.diff.leaf_depths) {
        jdepths[label] = {{"depths", depths},
                          {"delta", suite.diff.leaf_depth_delta.at(label)}};
    }
    doc["diff"]["leaf_depths"] = jdepths;

    out << "runs: " << suite.runs.size() << "  trees built: " << trees.size() << "\n";
    if (suite.diff.identical) {
        out << "trees identical\n";
    } else {
        out << "first divergence level: " << *suite.diff.first_divergence_level << "\n";
    }

    if (!opts.dialogs.empty() && trees.size() >= 2) {
        std::vector<Dialog> dialogs = load_dialogs(
            opts.dialogs, dialog_format_for(opts.format, opts.dialogs), &taxonomy);
        if (dialogs.empty()) throw EmptyInput("no dialogs in " + opts.dialogs);
        std::vector<EvaluationReport> reports;
        for (std::size_t i = 0; i < trees.size(); ++i) {
            GatewayFlags flags;
            flags.provider_path = pick(opts.annotate_providers.empty()
                                           ? opts.providers
                                           : opts.annotate_providers,
                                       static_cast<int>(i));
            flags.prices_path = opts.prices;
            flags.max_concurrent = std::max(4, opts.parallel);
            Session session = open_session(flags);
            AnnotatorConfig acfg;
            acfg.model_id = session.provider_config.model_id;
            acfg.temperature = opts.annotate_temperature;
            acfg.context_length = opts.context;
            acfg.prompt_template_set = opts.templates;
            Annotator annotator(session.gateway, acfg);
            CorpusResult result = annotator.annotate_corpus(trees[i], dialogs, opts.parallel);
            std::string ann_path =
                (dir / ("annotations_" + std::to_string(i + 1) + ".jsonl")).string();
            write_annotations(result.records, ann_path);
            std::vector<AnnotationRecord> usable;
            for (const auto& record : result.records)
                if (record.gold && *record.gold != kContinuationLabel)
                    usable.push_back(record);
            reports.push_back(score(usable));
        }
        ConsistencySummary summary = consistency_summary(reports);
        doc["summary"] = summary.to_json();
        out << "\n" << render_consistency_table(summary);
    }

    std::string doc_path = (dir / "consistency.json").string();
    std::ofstream file(doc_path, std::ios::binary);
    if (!file) throw IoError("cannot write " + doc_path);
    file << doc.dump(2) << "\n";
    file.close();

    RunManifest manifest;
    manifest.command = "consistency";
    manifest.created_at = utc_timestamp_now();
    manifest.config = {{"taxonomy", opts.taxonomy},
                       {"approach", opts.approach},
                       {"runs", opts.runs},
                       {"out_dir", opts.out_dir}};
    add_digest(manifest.inputs, opts.taxonomy);
    for (const auto& p : opts.providers) add_digest(manifest.inputs, p);
    add_digest(manifest.outputs, doc_path);
    UsageLedger::Totals totals;
    for (const auto& gateway : gateways) {
        auto t = gateway->ledger().totals();
        totals.calls += t.calls;
        totals.prompt_tokens += t.prompt_tokens;
        totals.completion_tokens += t.completion_tokens;
        totals.cost += t.cost;
    }
    manifest.ledger_totals = totals;
    write_manifest(manifest, (dir / "consistency.manifest.json").string());
    return trees.size() >= 2 ? 0 : 1;
}

// --- report ---

struct ReportOpts {
    std::vector<std::string> reports;
    std::vector<std::string> labels;
    bool consistency = false;
    std::string out;
};

int cmd_report(const ReportOpts& opts, std::ostream& out, std::ostream&) {
    if (opts.reports.empty()) throw EmptyInput("no report files given");
    std::vector<std::pair<std::string, EvaluationReport>> rows;
    for (std::size_t i = 0; i < opts.reports.size(); ++i) {
        std::ifstream in(opts.reports[i]);
        if (!in) throw IoError("cannot open report: " + opts.reports[i]);
        nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
        if (doc.is_discarded())
            throw MalformedRecord("report JSON: " + opts.reports[i]);
        nlohmann::json body = doc.contains("evaluation") ? doc["evaluation"] : doc;
        std::string label = i < opts.labels.size()
                                ? opts.labels[i]
                                : std::filesystem::path(opts.reports[i]).stem().string();
        rows.emplace_back(label, EvaluationReport::from_json(body));
    }
    out << render_report_table(rows);

    ordered_json doc;
    doc["rows"] = ordered_json::array();
    for (const auto& [label, report] : rows)
        doc["rows"].push_back({{"label", label}, {"evaluation", report.to_json()}});

    if (opts.consistency) {
        std::vector<EvaluationReport> reports;
        for (const auto& [label, report] : rows) reports.push_back(report);
        ConsistencySummary summary = consistency_summary(reports);
        doc["consistency"] = summary.to_json();
        out << "\n" << render_consistency_table(summary);
    }

    if (!opts.out.empty()) {
        std::ofstream file(opts.out, std::ios::binary);
        if (!file) throw IoError("cannot write " + opts.out);
        file << doc.dump(2) << "\n";
        file.close();

        RunManifest manifest;
        manifest.command = "report";
        manifest.created_at = utc_timestamp_now();
        manifest.config = {{"consistency", opts.consistency}, {"out", opts.out}};
        for (const auto& path : opts.reports) add_digest(manifest.inputs, path);
        add_digest(manifest.outputs, opts.out);
        write_manifest(manifest, opts.out + ".manifest.json");
    }
    return 0;
}

void add_gateway_flags(CLI::App* cmd, GatewayFlags& flags) {
    cmd->add_option("--provider", flags.provider_path,
                    "Provider config JSON (credentials come from the environment "
                    "variable it names)")
        ->required();
    cmd->add_option("--prices", flags.prices_path, "Price table JSON");
    cmd->add_option("--max-spend", flags.max_spend, "Abort once ledger cost reaches this")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--gateway-concurrency", flags.max_concurrent,
                    "Max in-flight provider requests")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Decision-tree annotation schemes for dialog taxonomies"};
    app.name("treescheme");
    app.require_subcommand(1);
    app.set_config("--config", "", "Read option defaults from a config file");
    app.fallthrough(false);

    SubsetOpts subset_opts;
    CLI::App* subset_cmd = app.add_subcommand("subset", "Derive a smaller taxonomy");
    subset_cmd->add_option("--taxonomy", subset_opts.taxonomy)->required()
        ->check(CLI::ExistingFile);
    subset_cmd->add_option("--mode", subset_opts.mode, "top-level | top-two | top-k")
        ->required();
    subset_cmd->add_option("--k", subset_opts.k, "Class count for top-k");
    subset_cmd->add_option("--definitions", subset_opts.definitions,
                           "Definitions for merged classes")
        ->check(CLI::ExistingFile);
    subset_cmd->add_option("-o,--out", subset_opts.out)->required();

    BuildOpts build_opts;
    build_opts.templates = default_templates_dir();
    CLI::App* build_cmd = app.add_subcommand("build", "Build a decision tree");
    build_cmd->add_option("--taxonomy", build_opts.taxonomy)->required()
        ->check(CLI::ExistingFile);
    build_cmd->add_option("--approach", build_opts.approach,
                          "yes-no | open-binary | open-nonbinary | split-select | "
                          "freq-split-select")
        ->required();
    add_gateway_flags(build_cmd, build_opts.gateway);
    build_cmd->add_option("--judge", build_opts.judge, "NLI judge config JSON")
        ->check(CLI::ExistingFile);
    build_cmd->add_option("--templates", build_opts.templates, "Prompt template directory");
    build_cmd->add_option("--candidates", build_opts.candidates)->check(CLI::PositiveNumber);
    build_cmd->add_option("--temperature", build_opts.temperature);
    build_cmd->add_option("--max-depth", build_opts.max_depth)->check(CLI::PositiveNumber);
    build_cmd->add_option("--reasoning-pairs", build_opts.reasoning_pairs)
        ->check(CLI::NonNegativeNumber);
    build_cmd->add_option("--structured-retries", build_opts.structured_retries)
        ->check(CLI::NonNegativeNumber);
    build_cmd->add_option("--proposal-retries", build_opts.proposal_retries)
        ->check(CLI::NonNegativeNumber);
    build_cmd->add_option("--backtrack-budget", build_opts.backtrack_budget)
        ->check(CLI::NonNegativeNumber);
    build_cmd->add_flag("--pairwise-answers", build_opts.pairwise_answers,
                        "Also vet answer texts against each other");
    build_cmd->add_option("--run-id", build_opts.run_id);
    build_cmd->add_option("--audit", build_opts.audit, "Audit log path");
    build_cmd->add_option("--ledger", build_opts.ledger, "Usage ledger path");
    build_cmd->add_option("-o,--out", build_opts.out)->required();

    AnnotateOpts annotate_opts;
    annotate_opts.templates = default_templates_dir();
    CLI::App* annotate_cmd = app.add_subcommand("annotate", "Label utterances with a tree");
    annotate_cmd->add_option("--tree", annotate_opts.tree)->required()
        ->check(CLI::ExistingFile);
    annotate_cmd->add_option("--dialogs", annotate_opts.dialogs)->required()
        ->check(CLI::ExistingFile);
    annotate_cmd->add_option("--format", annotate_opts.format, "jsonl | swda-csv");
    annotate_cmd->add_option("--taxonomy", annotate_opts.taxonomy,
                             "Validate gold labels against this taxonomy")
        ->check(CLI::ExistingFile);
    add_gateway_flags(annotate_cmd, annotate_opts.gateway);
    annotate_cmd->add_option("--templates", annotate_opts.templates);
    annotate_cmd->add_option("--context", annotate_opts.context)
        ->check(CLI::NonNegativeNumber);
    annotate_cmd->add_option("--temperature", annotate_opts.temperature);
    annotate_cmd->add_option("--match", annotate_opts.match,
                             "exact | normalized | overlap-fallback");
    annotate_cmd->add_option("--retries", annotate_opts.retries)
        ->check(CLI::NonNegativeNumber);
    annotate_cmd->add_option("--parallel", annotate_opts.parallel,
                             "Concurrent dialogs")
        ->check(CLI::PositiveNumber);
    annotate_cmd->add_flag("--skip-continuations,!--keep-continuations",
                           annotate_opts.skip_continuations,
                           "Skip turns gold-tagged \"+\"");
    annotate_cmd->add_option("--ledger", annotate_opts.ledger);
    annotate_cmd->add_option("-o,--out", annotate_opts.out)->required();

    EvaluateOpts evaluate_opts;
    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Score annotations");
    evaluate_cmd->add_option("--pred", evaluate_opts.pred)->required()
        ->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--tree", evaluate_opts.tree)->check(CLI::ExistingFile);
    evaluate_cmd->add_flag("--depth", evaluate_opts.depth,
                           "Depth-of-divergence analysis (needs --tree)");
    evaluate_cmd->add_option("--taxonomy", evaluate_opts.taxonomy)
        ->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--macro", evaluate_opts.macro,
                             "gold_present | all_taxonomy");
    evaluate_cmd->add_option("--ledger", evaluate_opts.ledger, "Cost report input")
        ->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--n-dialogs", evaluate_opts.n_dialogs,
                             "Dialog count for the per-dialog mean");
    evaluate_cmd->add_option("--label", evaluate_opts.label, "Row label in the table");
    evaluate_cmd->add_option("-o,--out", evaluate_opts.out)->required();

    ConsistencyOpts consistency_opts;
    consistency_opts.templates = default_templates_dir();
    CLI::App* consistency_cmd =
        app.add_subcommand("consistency", "Build N trees and diff them");
    consistency_cmd->add_option("--taxonomy", consistency_opts.taxonomy)->required()
        ->check(CLI::ExistingFile);
    consistency_cmd->add_option("--approach", consistency_opts.approach)->required();
    consistency_cmd->add_option("--runs", consistency_opts.runs)
        ->check(CLI::Range(2, 100));
    consistency_cmd->add_option("--provider", consistency_opts.providers,
                                "Provider config per run (last one reused)")
        ->required();
    consistency_cmd->add_option("--judge", consistency_opts.judges,
                                "Judge config per run (last one reused)");
    consistency_cmd->add_option("--prices", consistency_opts.prices);
    consistency_cmd->add_option("--max-spend", consistency_opts.max_spend);
    consistency_cmd->add_option("--templates", consistency_opts.templates);
    consistency_cmd->add_option("--candidates", consistency_opts.candidates);
    consistency_cmd->add_option("--temperature", consistency_opts.temperature);
    consistency_cmd->add_option("--max-depth", consistency_opts.max_depth);
    consistency_cmd->add_option("--reasoning-pairs", consistency_opts.reasoning_pairs);
    consistency_cmd->add_option("--run-id", consistency_opts.run_id);
    consistency_cmd->add_option("--dialogs", consistency_opts.dialogs,
                                "Also annotate and summarize per-run metrics");
    consistency_cmd->add_option("--format", consistency_opts.format);
    consistency_cmd->add_option("--annotate-provider",
                                consistency_opts.annotate_providers);
    consistency_cmd->add_option("--context", consistency_opts.context);
    consistency_cmd->add_option("--annotate-temperature",
                                consistency_opts.annotate_temperature);
    consistency_cmd->add_option("--parallel", consistency_opts.parallel);
    consistency_cmd->add_option("-o,--out-dir", consistency_opts.out_dir)->required();

    ReportOpts report_opts;
    CLI::App* report_cmd = app.add_subcommand("report", "Combine evaluation reports");
    report_cmd->add_option("--report", report_opts.reports, "Evaluation report JSON")
        ->required();
    report_cmd->add_option("--label", report_opts.labels, "Row label per report");
    report_cmd->add_flag("--consistency", report_opts.consistency,
                         "Also print per-metric max deltas");
    report_cmd->add_option("-o,--out", report_opts.out);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    consistency_opts.max_spend_set = consistency_cmd->count("--max-spend") > 0;
    build_opts.gateway.max_spend_set = build_cmd->count("--max-spend") > 0;
    annotate_opts.gateway.max_spend_set = annotate_cmd->count("--max-spend") > 0;

    try {
        if (subset_cmd->parsed()) return cmd_subset(subset_opts, out, err);
        if (build_cmd->parsed()) return cmd_build(build_opts, out, err);
        if (annotate_cmd->parsed()) return cmd_annotate(annotate_opts, out, err);
        if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate_opts, out, err);
        if (consistency_cmd->parsed()) return cmd_consistency(consistency_opts, out, err);
        if (report_cmd->parsed()) return cmd_report(report_opts, out, err);
    } catch (const AuthError& e) {
        emit_error(err, e.code(), e.what());
        return 2;
    } catch (const Error& e) {
        emit_error(err, e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error(err, "internal", e.what());
        return 1;
    }
    return 1;
}

}  // namespace treescheme
