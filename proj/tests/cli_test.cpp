// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "stylebal/cli.hpp"
#include "stylebal/io.hpp"
#include "stylebal/textures.hpp"

namespace stylebal {
namespace {

namespace fs = std::filesystem;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "stylebal");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::set<std::string> listing(const fs::path& dir) {
    std::set<std::string> names;
    for (const auto& e : fs::recursive_directory_iterator(dir)) names.insert(fs::relative(e.path(), dir).string());
    return names;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("stylebal_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    void textures(const std::string& sub, std::size_t count, std::size_t size, std::uint64_t seed,
                  const std::string& prefix) {
        ASSERT_EQ(run({"gen-textures", "-o", path(sub), "--count", std::to_string(count), "--size",
                       std::to_string(size), "--seed", std::to_string(seed), "--prefix", prefix})
                      .code,
                  kExitOk);
    }

    fs::path dir;
};

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"loss", "--bogus"}).code, kExitUsage);
    const Outcome r = run({"loss", "--content", "a.ppm"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("--style"), std::string::npos);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, MismatchedImagesExitThreeNamingShapes) {
    write_image(procedural_texture(16, 16, 1), path("c.ppm"));
    write_image(procedural_texture(16, 16, 2), path("s.ppm"));
    write_image(procedural_texture(32, 24, 3), path("p.ppm"));
    const Outcome r = run({"loss", "--content", path("c.ppm"), "--style", path("s.ppm"), "--pastiche", path("p.ppm")});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_NE(r.err.find("16x16x3"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("32x24x3"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, DataErrorsExitThree) {
    spit(path("bad.ppm"), "P6 1 1 65535\n");
    EXPECT_EQ(run({"loss", "--content", path("bad.ppm"), "--style", path("bad.ppm"), "--pastiche", path("bad.ppm")}).code,
              kExitData);
    EXPECT_EQ(run({"loss", "--content", path("missing.ppm"), "--style", "x", "--pastiche", "y"}).code, kExitData);
    spit(path("report.csv"), "sample,content,style,tap,classic,sup,inf,balanced\np,c,s,t,1,2,0,0.5\n");
    spit(path("ann.csv"), "id,score\np,2\n");
    const Outcome r = run({"analyze", "corr", "--report", path("report.csv"), "--annotations", path("ann.csv")});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
    spit(path("cfg.json"), R"({"loss": {"beta": 1.0, "betta": 2.0}})");
    write_image(procedural_texture(16, 16, 1), path("c.ppm"));
    const Outcome r =
        run({"loss", "--config", path("cfg.json"), "--content", path("c.ppm"), "--style", path("c.ppm"), "--pastiche",
             path("c.ppm")});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("betta"), std::string::npos) << r.err;
}

TEST_F(CliTest, LossWritesOnlyTheNamedReport) {
    write_image(procedural_texture(16, 16, 1), path("c.ppm"));
    write_image(procedural_texture(16, 16, 2), path("s.ppm"));
    const auto before = listing(dir);
    const Outcome r = run({"loss", "--content", path("c.ppm"), "--style", path("s.ppm"), "--pastiche", path("c.ppm"), "-o",
                       path("r.csv")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto after = listing(dir);
    after.erase("r.csv");
    EXPECT_EQ(after, before);
    std::ifstream in(path("r.csv"));
    const auto rows = read_report_csv(in);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0].sample, "c");
    EXPECT_EQ(rows[0].style, "s");
    EXPECT_EQ(rows.back().tap, "total");
}

TEST_F(CliTest, DirectoryModeJoinsByName) {
    textures("d/content", 2, 16, 1, "c");
    textures("d/style", 1, 16, 2, "s");
    fs::create_directories(dir / "d/pastiche");
    fs::copy_file(dir / "d/content/c00.ppm", dir / "d/pastiche/c00__s00.ppm");
    fs::copy_file(dir / "d/content/c01.ppm", dir / "d/pastiche/c01__s00.ppm");
    const Outcome r = run({"loss", "--dir", path("d")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    std::istringstream in(r.out);
    const auto rows = read_report_csv(in);
    ASSERT_EQ(rows.size(), 10u);
    EXPECT_EQ(rows[5].sample, "c01__s00");
    EXPECT_EQ(rows[5].content, "c01");

    fs::copy_file(dir / "d/content/c00.ppm", dir / "d/pastiche/c00__s07.ppm");
    EXPECT_EQ(run({"loss", "--dir", path("d")}).code, kExitData);
}

TEST_F(CliTest, SweepIsThreadIndependent) {
    textures("c", 1, 16, 1, "c");
    textures("s", 3, 16, 2, "s");
    const std::vector<std::string> base = {"sweep", "--contents", path("c"), "--styles", path("s"), "--steps", "6"};
    auto a = base, b = base;
    a.insert(a.end(), {"-o", path("a.csv"), "--pastiche-dir", path("pa"), "--threads", "1"});
    b.insert(b.end(), {"-o", path("b.csv"), "--pastiche-dir", path("pb"), "--threads", "3"});
    ASSERT_EQ(run(a).code, kExitOk);
    ASSERT_EQ(run(b).code, kExitOk);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    for (const char* f : {"c00__s00.ppm", "c00__s01.ppm", "c00__s02.ppm"})
        EXPECT_EQ(slurp(dir / "pa" / f), slurp(dir / "pb" / f)) << f;
}

TEST_F(CliTest, StylizeWritesImageAndTrajectory) {
    textures("i", 2, 16, 4, "x");
    const Outcome r = run({"stylize", "--content", path("i/x00.ppm"), "--style", path("i/x01.ppm"), "-o", path("p.ppm"),
                       "--trajectory", path("t.csv"), "--steps", "4"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(read_image(path("p.ppm")).shape(), (Shape{16, 16, 3}));
    std::istringstream t(slurp(path("t.csv")));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(t, line)) ++lines;
    EXPECT_EQ(lines, 6u);  // header + steps + 1
}

TEST_F(CliTest, McboundsReportsJson) {
    spit(path("spec.json"), R"({"a": {"values": [1, 3]}, "b": {"values": [1, 3], "probs": [0.5, 0.5]}})");
    const Outcome r = run({"mcbounds", "--spec", path("spec.json"), "--trials", "20000"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("lower").get<double>(), 2.0);
    EXPECT_EQ(j.at("upper").get<double>(), 10.0);
    EXPECT_TRUE(j.at("within").get<bool>());
    spit(path("bad.json"), R"({"a": {"point": 1}, "c": {}})");
    EXPECT_EQ(run({"mcbounds", "--spec", path("bad.json")}).code, kExitData);
}

TEST_F(CliTest, DeceptionPrintsRate) {
    spit(path("styles.csv"), "id,artist,v0,v1\na,A,0,0\nb,B,10,10\n");
    spit(path("stylized.csv"), "id,artist,v0,v1\np,A,1,1\nq,A,9,9\n");
    const Outcome r = run({"deception", "--stylized", path("stylized.csv"), "--styles", path("styles.csv")});
    ASSERT_EQ(r.code, kExitOk);
    EXPECT_EQ(r.out, "0.5\n");
}

TEST_F(CliTest, GradcheckSeedZero) {
    const Outcome r = run({"gradcheck", "--seed", "0"});
    ASSERT_EQ(r.code, kExitOk) << r.out << r.err;
    const auto at = r.out.find("max_rel_error ");
    ASSERT_NE(at, std::string::npos);
    EXPECT_LE(std::stod(r.out.substr(at + 14)), 1e-6);
}

TEST_F(CliTest, SelftestPassesAndIsDeterministic) {
    const Outcome a = run({"selftest", "-o", path("a.csv")});
    ASSERT_EQ(a.code, kExitOk) << a.err;
    const Outcome b = run({"selftest", "-o", path("b.csv")});
    ASSERT_EQ(b.code, kExitOk) << b.err;
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(slurp(path("a.csv")).find(",fail,"), std::string::npos);
}

}  // namespace
}  // namespace stylebal
