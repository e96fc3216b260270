#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ringorbit/fixture.hpp"
#include "ringorbit/search.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " '" + std::string(RINGORBIT_CLI_PATH) + "' " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / ("ringorbit-cli-" + std::to_string(::getpid()) + "-" + info->name());
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) const {
        const auto p = dir / name;
        std::ofstream(p) << text;
        return p;
    }
};

std::string fixture(const std::string& name) { return std::string(RINGORBIT_FIXTURE_DIR) + "/" + name; }

std::map<std::string, double> parse_summary(const std::string& text) {
    std::map<std::string, double> m;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        const auto value = line.substr(eq + 3);
        if (value == "true" || value == "false") {
            m[line.substr(0, eq)] = value == "true";
        } else {
            m[line.substr(0, eq)] = std::strtod(value.c_str(), nullptr);
        }
    }
    return m;
}

// CSV rows after the manifest comments and the header line.
std::vector<std::vector<double>> csv_rows(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        rows.push_back(row);
    }
    return rows;
}

} // namespace

TEST_F(Cli, ConstantsMatchClosedForms) {
    auto r = run("constants --n 4");
    ASSERT_EQ(r.code, 0);
    auto m = parse_summary(r.out);
    EXPECT_NEAR(m["a_n"], 0.25 + 1.0 / std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(m["b_n"], 0.5 + std::sqrt(2.0), 1e-14);
    r = run("constants --n 2");
    ASSERT_EQ(r.code, 0);
    m = parse_summary(r.out);
    EXPECT_EQ(m["a_n"], 0.25);
    EXPECT_EQ(m["b_n"], 0.5);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("constants --n 1").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("simulate --n 2 --m1 x").code, 2);
    EXPECT_EQ(run("simulate --n 2 --m1 1 --m2 1 --y10 1 --dy20 0.5").code, 2);  // no t0, no --t-end
    EXPECT_EQ(run("simulate --config /nonexistent/seed").code, 2);
}

TEST_F(Cli, PositiveEnergyIsRejected) {
    const auto r = run("simulate --n 2 --m1 1 --m2 1 --y10 1 --dy20 10 --df0 0 --t-end 1");
    EXPECT_EQ(r.code, 4);
    // Explicit opt-in integrates anyway.
    EXPECT_EQ(run("simulate --n 2 --m1 1 --m2 1 --y10 1 --dy20 10 --df0 0 --t-end 1 --allow-unbounded").code, 0);
}

TEST_F(Cli, SimulateCircularOrbit) {
    // v^2 = (m1 + a_n m2) / r with n = 2, a_2 = 1/4.
    const double v = std::sqrt((1.0 + 0.25) / 1.0);
    const auto out = dir / "traj.csv";
    std::ostringstream args;
    args.precision(17);
    args << "simulate --n 2 --m1 1 --m2 1 --y10 1 --df0 0 --dy20 " << v << " --t-end 20 --out " << out;
    const auto r = run(args.str());
    ASSERT_EQ(r.code, 0);
    const auto m = parse_summary(r.out);
    EXPECT_EQ(m.at("in_L"), 1.0);
    EXPECT_EQ(m.at("turning_points"), 0.0);
    EXPECT_NE(r.out.find("note: c2 uses df0 squared"), std::string::npos);
    const auto text = slurp(out);
    EXPECT_EQ(text.rfind("# ringorbit ", 0), 0u);
    const auto rows = csv_rows(text);
    ASSERT_GT(rows.size(), 10u);
    for (const auto& row : rows) {
        ASSERT_GE(row.size(), 5u);
        EXPECT_NEAR(row[3], 1.0, 1e-9);  // t,f,fdot,r,...
    }
}

TEST_F(Cli, ReconstructThreeBodies) {
    const auto out = dir / "bodies.csv";
    const auto r = run("reconstruct --config " + fixture("figure1_demo") + " --t-end 2 --samples 11 --out " +
                       out.string());
    ASSERT_EQ(r.code, 0);
    const auto rows = csv_rows(slurp(out));
    ASSERT_EQ(rows.size(), 33u);
    for (const auto& row : rows) {
        ASSERT_EQ(row.size(), 8u);
        if (row[1] == 0.0) {
            EXPECT_EQ(row[2], 0.0);
            EXPECT_EQ(row[3], 0.0);
        }
    }
    EXPECT_EQ(rows.back()[0], 2.0);
}

TEST_F(Cli, ReconstructNineteenBodies) {
    const auto r = run("reconstruct --config " + fixture("nineteen_body") + " --samples 3");
    ASSERT_EQ(r.code, 0);
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 57u);
    // After one period body 1 is back at (2, 0, 0).
    const auto& last_body1 = rows[2 * 19 + 1];
    EXPECT_NEAR(last_body1[2], 2.0, 1e-8);
    EXPECT_NEAR(last_body1[3], 0.0, 1e-8);
}

TEST_F(Cli, VerifyDetectsCorruptedDigit) {
    const auto row = ringorbit::load_fixture(fixture("table_seeds")).front();
    auto good = row.seed;
    const auto good_path = write("good", ringorbit::format_seed(good));
    auto r = run("verify --config " + good_path.string());
    EXPECT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["pass"].get<bool>());
    EXPECT_LT(j["cross_validation"].get<double>(), 1e-6);

    auto bad = good;
    bad.y10 += 1e-2 * bad.y10;
    const auto bad_path = write("bad", ringorbit::format_seed(bad));
    r = run("verify --config " + bad_path.string());
    EXPECT_EQ(r.code, 1);
    j = nlohmann::json::parse(r.out);
    EXPECT_FALSE(j["pass"].get<bool>());
    EXPECT_GT(j["xi"].get<double>(), 1e-3);
}

TEST_F(Cli, SearchEmptyGridAndInvalidGrid) {
    const auto empty = write("empty.json", R"({"n": 2, "theta0": "1/1", "m1": 1, "m2": 1, "y10": [],
                                              "dy20": 1, "df0": 0, "t0": 1})");
    auto r = run("search --grid " + empty.string());
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(csv_rows(r.out).empty());
    const auto invalid = write("invalid.json", R"({"n": 2, "theta0": "1/1"})");
    EXPECT_EQ(run("search --grid " + invalid.string()).code, 2);
    const auto broken = write("broken.json", "{");
    EXPECT_EQ(run("search --grid " + broken.string()).code, 2);
}

TEST_F(Cli, SweepIsByteIdenticalAcrossJobCounts) {
    const auto row = ringorbit::load_fixture(fixture("table_seeds")).at(3);
    ASSERT_EQ(row.label, "3bp-4");
    nlohmann::json g;
    g["n"] = 2;
    g["theta0"] = row.seed.theta0.str();
    g["m1"] = row.seed.m1;
    g["m2"] = row.seed.m2;
    g["y10"] = {{"from", row.seed.y10 * (1 - 1e-4)}, {"to", row.seed.y10 * (1 + 1e-4)}, {"count", 3}};
    g["dy20"] = row.seed.dy20;
    g["df0"] = {row.seed.df0, row.seed.df0 * (1 + 5e-4)};
    g["t0"] = *row.seed.t0;
    const auto grid = write("grid.json", g.dump());
    const auto a = dir / "a.jsonl";
    const std::string env = "SOURCE_DATE_EPOCH=1700000000";
    // The manifest names its output path, so both runs write to the same file.
    ASSERT_EQ(run("search --grid " + grid.string() + " --jobs 8 --out " + a.string(), env).code, 0);
    const auto eight = slurp(a);
    ASSERT_EQ(run("search --grid " + grid.string() + " --jobs 1 --out " + a.string(), env).code, 0);
    EXPECT_EQ(slurp(a), eight);
    EXPECT_NE(eight.find("# timestamp: 2023-11-14T22:13:20Z"), std::string::npos);
    std::istringstream is(eight);
    const auto found = ringorbit::read_catalog(is);
    ASSERT_FALSE(found.empty());
    EXPECT_LT(found.front().xi, 1e-10);
}

TEST_F(Cli, RefineFromSeedFile) {
    const auto row = ringorbit::load_fixture(fixture("table_seeds")).at(1);
    ASSERT_EQ(row.label, "3bp-2");
    const auto seed = write("seed", ringorbit::format_seed(row.seed));
    const auto r = run("search --from " + seed.string());
    ASSERT_EQ(r.code, 0);
    std::istringstream is(r.out);
    const auto found = ringorbit::read_catalog(is);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_TRUE(found[0].refined);
    EXPECT_LT(found[0].xi, 1e-10);
    EXPECT_LT(std::abs(found[0].q.y10 / row.seed.y10 - 1.0), 1e-3);
}
