#include "cellgep_cli/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "cellgep/snapshot.hpp"
#include "cellgep/trainer_bridge.hpp"

namespace cellgep::cli {

namespace fs = std::filesystem;

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorChoice& choice, const SearchConfig& config)
{
    if (choice.kind == "surrogate") {
        return std::make_unique<SurrogateEvaluator>(config.rng_seed);
    }
    if (choice.kind == "external") {
        if (choice.trainer_cmd.empty()) {
            throw std::invalid_argument("--evaluator external requires --trainer-cmd");
        }
        TrainerOptions t;
        t.command = choice.trainer_cmd;
        t.timeout_seconds = choice.trainer_timeout;
        t.weight_dir = choice.weight_dir;
        t.dataset_profile = config.dataset_profile;
        t.seed = config.rng_seed;
        t.max_processes = config.eval_workers;
        return std::make_unique<ExternalEvaluator>(std::move(t));
    }
    throw std::invalid_argument("unknown evaluator '" + choice.kind + "' (expected surrogate or external)");
}

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) {
        throw PersistenceError("cannot write " + path.string());
    }
}

std::string gene_lines(const std::vector<GeneRecord>& genes)
{
    std::string out;
    for (const auto& g : genes) {
        out += "g" + std::to_string(g.id) + " " + to_text(g.genotype) + "\n";
    }
    return out;
}

std::string gen_name(int generation)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "gen_%04d.json", generation);
    return buf;
}

} // namespace

void write_best(const fs::path& out_dir, const Champion& champion, const SearchConfig& config)
{
    const auto dir = out_dir / "best";
    fs::create_directories(dir);
    write_text(dir / "normal_cell.txt", to_text(champion.individual.normal) + "\n");
    write_text(dir / "reduction_cell.txt", to_text(champion.reduction_cell.genotype) + "\n");
    write_text(dir / "normal_genes.txt", gene_lines(champion.normal_genes));
    write_text(dir / "reduction_genes.txt", gene_lines(champion.reduction_genes));
    write_json_file(dir / "champion.json", to_json(champion));
    export_descriptor(compile_champion(champion, config, config.search_width, config.normal_repeats),
                      dir / "descriptor_search.json");
    export_descriptor(compile_champion(champion, config, config.full_width, config.normal_repeats),
                      dir / "descriptor_full.json");
}

void truncate_lines(const fs::path& path, std::uint64_t lines)
{
    if (!fs::exists(path)) {
        if (lines != 0) {
            throw PersistenceError(path.string() + " is missing but the snapshot expects " + std::to_string(lines)
                                   + " events");
        }
        return;
    }
    std::ifstream in(path, std::ios::binary);
    std::string kept;
    std::string line;
    std::uint64_t n = 0;
    while (n < lines && std::getline(in, line)) {
        kept += line;
        kept += '\n';
        ++n;
    }
    if (n < lines) {
        throw PersistenceError(path.string() + " has " + std::to_string(n) + " events but the snapshot expects "
                               + std::to_string(lines));
    }
    in.close();
    write_text(path, kept);
}

std::vector<double> parse_number_list(const std::string& text)
{
    std::string normalized = text;
    for (char& ch : normalized) {
        if (ch == ',' || ch == ';') {
            ch = ' ';
        }
    }
    std::istringstream in(normalized);
    std::vector<double> out;
    std::string token;
    while (in >> token) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size()) {
            throw std::invalid_argument("not a number: '" + token + "'");
        }
        out.push_back(v);
    }
    return out;
}

namespace {

/// Streams events and per-generation files into an output directory.
class RunWriter {
public:
    RunWriter(fs::path out, int snapshot_every, bool append)
        : out_(std::move(out)), snapshot_every_(snapshot_every)
    {
        fs::create_directories(out_ / "generations");
        if (snapshot_every_ > 0) {
            fs::create_directories(out_ / "snapshots");
        }
        events_.open(out_ / "events.log", std::ios::binary | (append ? std::ios::app : std::ios::trunc));
        if (!events_) {
            throw PersistenceError("cannot open " + (out_ / "events.log").string());
        }
    }

    SearchCallbacks callbacks()
    {
        SearchCallbacks cb;
        cb.on_event = [this](const json& e) { events_ << e.dump() << '\n'; };
        cb.on_generation = [this](const GenerationStats& g, const SearchState& s) { on_generation(g, s); };
        return cb;
    }

private:
    void on_generation(const GenerationStats& g, const SearchState& s)
    {
        events_.flush();
        if (!events_) {
            throw PersistenceError("cannot write events.log");
        }
        write_json_file(out_ / "generations" / gen_name(g.generation), to_json(g));
        write_snapshot(s, out_ / "snapshot.json");
        if (snapshot_every_ > 0 && g.generation % snapshot_every_ == 0) {
            write_snapshot(s, out_ / "snapshots" / gen_name(g.generation));
        }
    }

    fs::path out_;
    int snapshot_every_;
    std::ofstream events_;
};

void print_summary(std::ostream& out, const SearchState& s, const fs::path& dir)
{
    out << "generations completed: " << s.generation << "\n";
    out << "evaluations: " << s.evaluations << " (" << s.failed_evaluations << " failed)\n";
    if (s.champion) {
        const auto& c = *s.champion;
        out << "best fitness: " << std::setprecision(6) << c.individual.fitness.value_or(0.0) << " (individual "
            << c.individual.id << ", generation " << c.generation << ")\n";
        out << "best normal cell: " << to_text(c.individual.normal) << "\n";
        out << "best reduction cell: " << to_text(c.reduction_cell.genotype) << "\n";
    }
    out << "artifacts: " << dir.string() << "\n";
}

void add_evaluator_options(CLI::App* cmd, EvaluatorChoice& ev)
{
    cmd->add_option("--evaluator", ev.kind, "surrogate or external")
        ->check(CLI::IsMember({"surrogate", "external"}))
        ->capture_default_str();
    cmd->add_option("--trainer-cmd", ev.trainer_cmd, "trainer command (run through /bin/sh -c)");
    cmd->add_option("--trainer-timeout", ev.trainer_timeout, "seconds to wait for one trainer reply")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

struct BudgetFlags {
    std::optional<std::int64_t> generations;
    std::optional<double> seconds;

    void add_to(CLI::App* cmd)
    {
        auto* g = cmd->add_option("--budget-generations", generations, "stop after this many generations")
                      ->check(CLI::NonNegativeNumber);
        auto* s = cmd->add_option("--budget-seconds", seconds, "stop at the first generation boundary past this")
                      ->check(CLI::NonNegativeNumber);
        g->excludes(s);
    }

    void apply(SearchConfig& c) const
    {
        if (generations) {
            c.budget.kind = Budget::Kind::Generations;
            c.budget.generations = *generations;
        }
        if (seconds) {
            c.budget.kind = Budget::Kind::Seconds;
            c.budget.seconds = *seconds;
        }
    }
};

template <class Fn>
void print_numbers(std::ostream& out, const std::vector<double>& v, Fn&& each)
{
    for (double x : v) {
        each(out, x);
    }
}

double mean(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// A list given inline ("97.1,96.8") or as a path to a file holding one.
std::vector<double> read_accuracies(const std::string& arg)
{
    if (fs::is_regular_file(arg)) {
        std::ifstream f(arg);
        std::stringstream buf;
        buf << f.rdbuf();
        return parse_number_list(buf.str());
    }
    return parse_number_list(arg);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Evolves convolutional cells with gene expression programming and exports the best network."};
    app.name("cellgep");
    app.require_subcommand(1);

    // search
    auto* search = app.add_subcommand("search", "Run a search and write its artifacts");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    BudgetFlags budget;
    EvaluatorChoice ev;
    std::string out_dir = "cellgep-run";
    int snapshot_every = 0;
    std::optional<int> stop_after;
    std::optional<int> workers;
    search->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    search->add_option("--seed", seed, "override rng_seed");
    budget.add_to(search);
    add_evaluator_options(search, ev);
    search->add_option("--workers", workers, "concurrent evaluations")->check(CLI::PositiveNumber);
    search->add_option("--out", out_dir, "output directory")->capture_default_str();
    search->add_option("--snapshot-every", snapshot_every, "also keep snapshots/gen_NNNN.json every N generations")
        ->check(CLI::NonNegativeNumber);
    search->add_option("--stop-after", stop_after, "stop after this generation even if budget remains")
        ->check(CLI::NonNegativeNumber);

    // resume
    auto* resume = app.add_subcommand("resume", "Continue a search from a snapshot");
    std::string snapshot_path;
    std::string resume_out;
    resume->add_option("snapshot", snapshot_path, "snapshot file")->required()->check(CLI::ExistingFile);
    resume->add_option("--out", resume_out, "output directory (default: the snapshot's directory)");
    budget.add_to(resume);
    add_evaluator_options(resume, ev);
    resume->add_option("--snapshot-every", snapshot_every)->check(CLI::NonNegativeNumber);
    resume->add_option("--stop-after", stop_after)->check(CLI::NonNegativeNumber);

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate an exported model descriptor");
    std::string descriptor_path;
    int epochs = 1;
    std::uint64_t eval_seed = 0;
    std::string format = "text";
    eval->add_option("descriptor", descriptor_path, "descriptor JSON file")->required();
    add_evaluator_options(eval, ev);
    eval->add_option("--epochs", epochs, "epochs to train")->check(CLI::NonNegativeNumber)->capture_default_str();
    eval->add_option("--seed", eval_seed, "evaluator seed")->capture_default_str();
    eval->add_option("--format", format, "text or structured")
        ->check(CLI::IsMember({"text", "structured"}))
        ->capture_default_str();

    // export-best
    auto* export_best = app.add_subcommand("export-best", "Write the best cells of a snapshot");
    std::string export_out;
    export_best->add_option("snapshot", snapshot_path, "snapshot file")->required()->check(CLI::ExistingFile);
    export_best->add_option("--out", export_out, "output directory")->required();

    // baseline
    auto* baseline = app.add_subcommand("baseline", "Evaluate random within-budget candidates");
    int count = 0;
    baseline->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    baseline->add_option("--count", count, "number of candidates")->required()->check(CLI::PositiveNumber);
    baseline->add_option("--seed", seed, "override rng_seed");
    add_evaluator_options(baseline, ev);
    baseline->add_option("--format", format)->check(CLI::IsMember({"text", "structured"}));

    // stats
    auto* stats = app.add_subcommand("stats", "Mean accuracies and relative improvement");
    std::string search_accs;
    std::string baseline_accs;
    stats->add_option("--search-accs", search_accs, "accuracies of searched models (list or file)")->required();
    stats->add_option("--baseline-accs", baseline_accs, "accuracies of the reference models (list or file)")
        ->required();
    stats->add_option("--format", format)->check(CLI::IsMember({"text", "structured"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    const auto load_config = [&] {
        SearchConfig c = config_path.empty() ? default_config() : load_config_file(config_path);
        if (seed) {
            c.rng_seed = *seed;
        }
        budget.apply(c);
        if (workers) {
            c.eval_workers = *workers;
        }
        validate_config(c);
        return c;
    };

    try {
        if (search->parsed()) {
            const SearchConfig config = load_config();
            const fs::path dir = out_dir;
            fs::create_directories(dir);
            if (ev.weight_dir == "weights") {
                ev.weight_dir = (dir / "weights").string();
            }
            auto evaluator = make_evaluator(ev, config);
            write_json_file(dir / "config.json", to_json(config));
            RunWriter writer(dir, snapshot_every, false);
            const auto cb = writer.callbacks();
            SearchState state = start_search(config, *evaluator, cb);
            continue_search(state, *evaluator, cb, stop_after);
            write_best(dir, *state.champion, config);
            print_summary(out, state, dir);
            return kOk;
        }
        if (resume->parsed()) {
            SearchState state = read_snapshot(snapshot_path);
            budget.apply(state.config);
            validate_config(state.config);
            const fs::path dir = resume_out.empty() ? fs::path(snapshot_path).parent_path() : fs::path(resume_out);
            fs::create_directories(dir);
            if (ev.weight_dir == "weights") {
                ev.weight_dir = (dir / "weights").string();
            }
            auto evaluator = make_evaluator(ev, state.config);
            truncate_lines(dir / "events.log", state.event_count);
            write_json_file(dir / "config.json", to_json(state.config));
            RunWriter writer(dir, snapshot_every, true);
            continue_search(state, *evaluator, writer.callbacks(), stop_after);
            if (state.champion) {
                write_best(dir, *state.champion, state.config);
            }
            print_summary(out, state, dir);
            return kOk;
        }
        if (eval->parsed()) {
            const auto descriptor = import_descriptor(descriptor_path);
            SearchConfig config = default_config();
            config.rng_seed = eval_seed;
            config.dataset_profile = descriptor.dataset_profile;
            auto evaluator = make_evaluator(ev, config);
            EvaluationRequest req;
            req.descriptor = descriptor;
            req.epochs_to_train = epochs;
            req.cumulative_epochs = epochs;
            req.weight_keys = weight_keys(descriptor);
            req.seed = eval_seed;
            FitnessRecord r;
            if (epochs == 0) {
                r.fitness = 0.0;
            } else {
                r = evaluator->evaluate(req);
            }
            if (format == "structured") {
                json keys = json::array();
                for (const auto& k : r.updated_keys) {
                    keys.push_back({{"key", k.key}, {"fitness", k.fitness}});
                }
                out << json{{"candidate_id", r.candidate_id},
                            {"fitness", r.fitness},
                            {"epochs", r.epochs},
                            {"wall_time", r.wall_time},
                            {"params", descriptor.total_params},
                            {"updated_keys", keys}}
                           .dump()
                    << "\n";
            } else {
                out << "fitness: " << std::setprecision(6) << r.fitness << "\n"
                    << "epochs: " << r.epochs << "\n"
                    << "params: " << descriptor.total_params << "\n"
                    << "wall_time: " << r.wall_time << " s\n"
                    << "updated_keys: " << r.updated_keys.size() << "\n";
            }
            return kOk;
        }
        if (export_best->parsed()) {
            const SearchState state = read_snapshot(snapshot_path);
            if (!state.champion) {
                err << "cellgep: snapshot has no evaluated individual yet\n";
                return kRuntime;
            }
            write_best(export_out, *state.champion, state.config);
            out << "wrote " << (fs::path(export_out) / "best").string() << "\n";
            return kOk;
        }
        if (baseline->parsed()) {
            const SearchConfig config = load_config();
            auto evaluator = make_evaluator(ev, config);
            const auto fitness = random_baseline(config, *evaluator, count);
            if (format == "structured") {
                out << json{{"count", count}, {"seed", config.rng_seed}, {"fitness", fitness}, {"mean", mean(fitness)}}
                           .dump()
                    << "\n";
            } else {
                print_numbers(out, fitness, [](std::ostream& o, double x) { o << std::setprecision(17) << x << "\n"; });
            }
            return kOk;
        }
        if (stats->parsed()) {
            const auto s = read_accuracies(search_accs);
            const auto b = read_accuracies(baseline_accs);
            if (s.empty() || b.empty()) {
                err << "cellgep: --search-accs and --baseline-accs must each hold at least one value\n";
                return kUsage;
            }
            const double ms = mean(s);
            const double mb = mean(b);
            const double ri = relative_improvement(ms, mb);
            if (format == "structured") {
                out << json{{"search_mean", ms}, {"baseline_mean", mb}, {"relative_improvement", ri}}.dump() << "\n";
            } else {
                out << std::fixed << std::setprecision(4) << "search mean:   " << ms << " (n=" << s.size() << ")\n"
                    << "baseline mean: " << mb << " (n=" << b.size() << ")\n"
                    << "RI:            " << ri << " %\n";
            }
            return kOk;
        }
    } catch (const ProtocolError& e) {
        err << "cellgep: trainer protocol error: " << e.what() << "\n  payload: " << e.raw_payload << "\n";
        return kProtocol;
    } catch (const ConfigError& e) {
        err << "cellgep: invalid config:\n" << e.what();
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "cellgep: " << e.what() << "\n";
        return kUsage;
    } catch (const std::domain_error& e) {
        err << "cellgep: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "cellgep: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}

} // namespace cellgep::cli
