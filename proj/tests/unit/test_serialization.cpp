#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cellgep/serialization.hpp"
#include "fixtures.hpp"

using namespace cellgep;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("cellgep-ser-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("genotypes and gene pools round-trip")
{
    Rng rng(9);
    auto pool = init_pool(Context::ReductionGene, 12, 2, rng, 3);
    pool.at(4).fitness = 0.625;
    pool.at(5).in_use_count = 2;
    pool.erase(7);
    CHECK(gene_pool_from_json(json::parse(to_json(pool).dump())) == pool);
    for (const auto& [id, r] : pool.records()) {
        CHECK(genotype_from_json(to_json(r.genotype)) == r.genotype);
    }
}

TEST_CASE("descriptors round-trip and export byte-identically")
{
    TempDir tmp;
    for (auto profile : {DatasetProfile::Cifar, DatasetProfile::ImageNetMobile}) {
        const auto d = fixture::small_network(profile == DatasetProfile::Cifar ? 16 : 64, profile);
        CHECK(descriptor_from_json(to_json(d)) == d);
        export_descriptor(d, tmp.path / "a.json");
        export_descriptor(d, tmp.path / "b.json");
        CHECK(slurp(tmp.path / "a.json") == slurp(tmp.path / "b.json"));
        const auto back = import_descriptor(tmp.path / "a.json");
        CHECK(back == d);
        export_descriptor(back, tmp.path / "c.json");
        CHECK(slurp(tmp.path / "a.json") == slurp(tmp.path / "c.json"));
    }
}

TEST_CASE("unknown schema versions are refused")
{
    auto j = to_json(fixture::small_network());
    j["schema_version"] = 99;
    CHECK_THROWS_AS(descriptor_from_json(j), SchemaVersionError);
    j["schema_version"] = 1;
    j["schema"] = "something.else";
    CHECK_THROWS_AS(descriptor_from_json(j), SchemaVersionError);
}

TEST_CASE("malformed descriptors raise parse errors")
{
    auto j = to_json(fixture::small_network());
    j.erase("head");
    CHECK_THROWS_AS(descriptor_from_json(j), ParseError);
    auto k = to_json(fixture::small_network());
    k["width"] = "wide";
    CHECK_THROWS_AS(descriptor_from_json(k), ParseError);
    CHECK_THROWS_AS(descriptor_from_json(json::array()), ParseError);
}

TEST_CASE("invariant violations name the node")
{
    auto j = to_json(fixture::small_network());
    auto& nodes = j["stages"][0]["normal_cell"]["nodes"];
    REQUIRE(nodes.size() > 1);
    nodes[1]["out_channels"] = 17;
    try {
        (void)descriptor_from_json(j);
        FAIL("expected InvariantError");
    } catch (const InvariantError& e) {
        CHECK(std::string(e.what()).find("node 1") != std::string::npos);
    }

    auto k = to_json(fixture::small_network());
    k["stages"][1]["normal_cell"]["nodes"][1]["inputs"] = {5};
    CHECK_THROWS_AS(descriptor_from_json(k), InvariantError);
}

TEST_CASE("config files are strict")
{
    auto c = default_config();
    c.population_size = 12;
    c.budget.kind = Budget::Kind::Seconds;
    c.budget.seconds = 60;
    c.rates.two_point_rate = 0.3;
    CHECK(config_from_json(to_json(c)) == c);
    CHECK(config_from_json(json::object()) == default_config());
    CHECK(config_from_json(json{{"epochs_max", 6}}).epochs_max == 6);
    CHECK_THROWS_AS(config_from_json(json{{"populaton_size", 10}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"population_size", "ten"}}), ConfigError);
    // Overlaying does not validate; loading a file does.
    CHECK(config_from_json(json{{"population_size", 0}}).population_size == 0);

    TempDir tmp;
    {
        std::ofstream(tmp.path / "c.json") << R"({"population_size": 8, "dataset_profile": "cifar"})";
    }
    CHECK(load_config_file(tmp.path / "c.json").population_size == 8);
    {
        std::ofstream(tmp.path / "bad.json") << "{ not json";
    }
    CHECK_THROWS(load_config_file(tmp.path / "bad.json"));
    {
        std::ofstream(tmp.path / "zero.json") << R"({"population_size": 0})";
    }
    CHECK_THROWS_AS(load_config_file(tmp.path / "zero.json"), ConfigError);
    CHECK_THROWS(load_config_file(tmp.path / "missing.json"));
}

TEST_CASE("json files are written with sorted keys and a trailing newline")
{
    TempDir tmp;
    write_json_file(tmp.path / "x.json", json{{"b", 1}, {"a", 2}});
    const auto text = slurp(tmp.path / "x.json");
    CHECK(text.find("\"a\"") < text.find("\"b\""));
    CHECK(text.back() == '\n');
    CHECK(read_json_file(tmp.path / "x.json") == json{{"a", 2}, {"b", 1}});
    CHECK_THROWS_AS(write_json_file(tmp.path / "x.json" / "y.json", json{}), PersistenceError);
}
