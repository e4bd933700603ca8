#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cellgep/serialization.hpp"
#include "cellgep_cli/cli.hpp"

using namespace cellgep;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result tool(std::vector<std::string> args)
{
    args.insert(args.begin(), "cellgep");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Workspace {
    fs::path root;
    Workspace()
    {
        root = fs::temp_directory_path() / ("cellgep-cli-" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        std::ofstream(root / "config.json") << R"({"population_size": 4, "reduction_pool_init": 4,
            "gene_pool_init": 8, "gene_pool_max": 20, "epochs_max": 4})";
    }
    ~Workspace() { fs::remove_all(root); }
    std::string path(const std::string& name) const { return (root / name).string(); }
};

const char* kBestFiles[] = {"normal_cell.txt",       "reduction_cell.txt",   "normal_genes.txt",  "reduction_genes.txt",
                            "descriptor_search.json", "descriptor_full.json", "champion.json"};

} // namespace

TEST_CASE("search writes its artifacts reproducibly")
{
    Workspace ws;
    const auto base = std::vector<std::string>{"search", "--config", ws.path("config.json"), "--seed", "3",
                                               "--budget-generations", "6"};
    auto a = base;
    a.insert(a.end(), {"--out", ws.path("a")});
    auto b = base;
    b.insert(b.end(), {"--out", ws.path("b"), "--workers", "2"});
    const auto ra = tool(a);
    REQUIRE(ra.code == cli::kOk);
    REQUIRE(tool(b).code == cli::kOk);
    for (const char* f : kBestFiles) {
        INFO(f);
        REQUIRE(fs::exists(ws.root / "a" / "best" / f));
        CHECK(slurp(ws.root / "a" / "best" / f) == slurp(ws.root / "b" / "best" / f));
    }
    CHECK(slurp(ws.root / "a" / "events.log") == slurp(ws.root / "b" / "events.log"));
    CHECK(fs::exists(ws.root / "a" / "generations" / "gen_0006.json"));
    CHECK(fs::exists(ws.root / "a" / "snapshot.json"));
    CHECK(import_descriptor(ws.root / "a" / "best" / "descriptor_full.json").width == 64);
}

TEST_CASE("resume continues the event log where the snapshot left it")
{
    Workspace ws;
    const std::vector<std::string> common{"--config", ws.path("config.json"), "--seed", "4", "--budget-generations", "6"};
    auto full = std::vector<std::string>{"search"};
    full.insert(full.end(), common.begin(), common.end());
    full.insert(full.end(), {"--out", ws.path("full")});
    REQUIRE(tool(full).code == 0);

    auto part = std::vector<std::string>{"search"};
    part.insert(part.end(), common.begin(), common.end());
    part.insert(part.end(), {"--out", ws.path("part"), "--stop-after", "3", "--snapshot-every", "1"});
    REQUIRE(tool(part).code == 0);
    // Resume from an older snapshot so the log has lines to drop.
    fs::copy_file(ws.root / "part" / "snapshots" / "gen_0002.json", ws.root / "part" / "snapshot.json",
                  fs::copy_options::overwrite_existing);
    const auto r = tool({"resume", ws.path("part/snapshot.json")});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(slurp(ws.root / "part" / "events.log") == slurp(ws.root / "full" / "events.log"));
    for (const char* f : kBestFiles) {
        CHECK(slurp(ws.root / "part" / "best" / f) == slurp(ws.root / "full" / "best" / f));
    }

    REQUIRE(tool({"export-best", ws.path("full/snapshot.json"), "--out", ws.path("exported")}).code == 0);
    CHECK(slurp(ws.root / "exported" / "best" / "normal_cell.txt") == slurp(ws.root / "full" / "best" / "normal_cell.txt"));
}

TEST_CASE("eval, baseline and stats")
{
    Workspace ws;
    REQUIRE(tool({"search", "--config", ws.path("config.json"), "--budget-generations", "1", "--out", ws.path("run")}).code
            == 0);
    const auto e = tool({"eval", ws.path("run/best/descriptor_search.json"), "--epochs", "3", "--format", "structured"});
    REQUIRE(e.code == 0);
    const auto j = json::parse(e.out);
    CHECK(j.at("fitness").get<double>() > 0.0);
    CHECK(j.at("fitness").get<double>() < 1.0);

    const auto b = tool({"baseline", "--config", ws.path("config.json"), "--count", "3", "--format", "structured"});
    REQUIRE(b.code == 0);
    CHECK(json::parse(b.out).at("fitness").size() == 3);

    const auto s = tool({"stats", "--search-accs", "97.18", "--baseline-accs", "96.88", "--format", "structured"});
    REQUIRE(s.code == 0);
    CHECK(json::parse(s.out).at("relative_improvement").get<double>() == doctest::Approx(0.30966).epsilon(1e-4));

    std::ofstream(ws.root / "accs.txt") << "97.0\n97.4\n";
    const auto f = tool({"stats", "--search-accs", ws.path("accs.txt"), "--baseline-accs", "96.0,97.0", "--format",
                        "structured"});
    REQUIRE(f.code == 0);
    CHECK(json::parse(f.out).at("search_mean").get<double>() == doctest::Approx(97.2));
    CHECK(json::parse(f.out).at("baseline_mean").get<double>() == doctest::Approx(96.5));
}

TEST_CASE("exit codes")
{
    Workspace ws;
    CHECK(tool({"frobnicate"}).code == cli::kUsage);
    CHECK(tool({"search", "--budget-generations", "1", "--budget-seconds", "5"}).code == cli::kUsage);
    CHECK(tool({"search", "--evaluator", "external", "--out", ws.path("x")}).code == cli::kUsage);
    CHECK(tool({"stats", "--search-accs", "1", "--baseline-accs", "0"}).code == cli::kUsage);
    std::ofstream(ws.root / "bad.json") << R"({"population_size": -1})";
    CHECK(tool({"search", "--config", ws.path("bad.json"), "--out", ws.path("y")}).code == cli::kUsage);
    CHECK(tool({"eval", ws.path("missing.json")}).code == cli::kRuntime);

    const std::string garbage = std::string("'") + FAKE_TRAINER_PATH + "' garbage";
    const auto p = tool({"search", "--config", ws.path("config.json"), "--budget-generations", "1", "--evaluator",
                        "external", "--trainer-cmd", garbage, "--out", ws.path("z")});
    CHECK(p.code == cli::kProtocol);
    CHECK(p.err.find("this is not json") != std::string::npos);

    const std::string ok = std::string("'") + FAKE_TRAINER_PATH + "' ok";
    const auto good = tool({"search", "--config", ws.path("config.json"), "--budget-generations", "1", "--evaluator",
                           "external", "--trainer-cmd", ok, "--out", ws.path("w")});
    INFO(good.err);
    CHECK(good.code == cli::kOk);
}
