#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <regex>

#include "test_support.hpp"

namespace fixtures = petition::fixtures;

namespace {

struct Run {
    int status = -1;
    std::string output;
};

std::string quote(const std::string &s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

Run run(const std::string &args) {
    const std::string cmd = quote(PETITION_CLI) + " " + args + " 2>&1";
    Run r;
    FILE *pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), got);
    const int st = ::pclose(pipe);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string value_of(const std::string &output, const std::string &key) {
    const std::regex re("(^|\\n)" + key + "=([^\\n]*)");
    std::smatch m;
    return std::regex_search(output, m, re) ? m[2].str() : std::string();
}

/// Small corpus and config in a temp directory.
struct Project {
    fixtures::TempDir dir{"cli"};
    std::vector<petition::corpus::Petition> petitions;

    explicit Project(std::size_t n = 240, const std::string &scheme = "uk", const std::string &train_extra = "") {
        petitions = fixtures::keyword_corpus(n, 21, 3.0, 0.1).petitions;
        fixtures::write_file(dir / "petitions.jsonl", fixtures::to_jsonl(petitions));
        write_config("config.json", scheme, train_extra);
    }

    void write_config(const std::string &name, const std::string &scheme, const std::string &train_extra = "") const {
        fixtures::write_file(dir / name, R"({"petitions": "petitions.jsonl", "output_dir": "out", "scheme": ")" +
                                             scheme + R"(", "embed_dim": 8, "gamma_grid": [0.1, 1.0],
            "train": {"epochs": 3, "batch_size": 16, "filters_per_width": 2, "hidden_sizes": [4], "fusion_dim": 3)" +
                                             train_extra + R"(},
            "baselines": {"krr_cap": 100, "lambda_grid": [0.01, 1.0], "sigma_multipliers": [1.0]}})");
    }

    [[nodiscard]] std::string config(const std::string &name = "config.json") const {
        return "--config " + quote((dir / name).string());
    }
};

}  // namespace

TEST(Cli, UsageErrorsExitWithOne) {
    Project p(60);
    EXPECT_EQ(run("").status, 1);
    EXPECT_EQ(run("frobnicate").status, 1);
    EXPECT_EQ(run(p.config() + " train --variant cnn_magic").status, 1);
    fixtures::write_file(p.dir / "bad.json", R"({"petitions": "petitions.jsonl", "epochs": 3})");
    const auto bad = run(p.config("bad.json") + " prepare");
    EXPECT_EQ(bad.status, 1);
    EXPECT_NE(bad.output.find("epochs"), std::string::npos) << bad.output;
    EXPECT_EQ(run("prepare").status, 1);
}

TEST(Cli, TrainBeforePrepareIsActionable) {
    Project p(60);
    const auto r = run(p.config() + " train --variant regress");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("prepare"), std::string::npos) << r.output;
}

TEST(Cli, FullWorkflow) {
    Project p;
    const auto prep = run(p.config() + " prepare");
    ASSERT_EQ(prep.status, 0) << prep.output;
    const std::string manifest_path = value_of(prep.output, "manifest");
    ASSERT_FALSE(manifest_path.empty()) << prep.output;
    const auto manifest = fixtures::read_file(manifest_path);
    EXPECT_NE(manifest.find("100000"), std::string::npos);
    const auto again = run(p.config() + " prepare");
    ASSERT_EQ(again.status, 0) << again.output;
    EXPECT_EQ(fixtures::read_file(manifest_path), manifest);

    const auto ord = run(p.config() + " train --variant regress+ord");
    ASSERT_EQ(ord.status, 0) << ord.output;
    const std::string ord_ck = value_of(ord.output, "checkpoint");
    const std::string history_path = value_of(ord.output, "history");
    const auto history = fixtures::read_file(history_path);
    EXPECT_FALSE(history.empty());
    EXPECT_NE(fixtures::read_file(ord_ck + "/manifest.json").find("ordinal.weight"), std::string::npos);
    ASSERT_EQ(run(p.config() + " train --variant regress+ord").status, 0);
    EXPECT_EQ(fixtures::read_file(history_path), history);

    const auto reg = run(p.config() + " train --variant regress");
    ASSERT_EQ(reg.status, 0) << reg.output;
    const auto reg_manifest = fixtures::read_file(value_of(reg.output, "checkpoint") + "/manifest.json");
    EXPECT_EQ(reg_manifest.find("ordinal."), std::string::npos);

    const auto extra = run(p.config() + " train --variant regress+ord+feat+extra");
    ASSERT_EQ(extra.status, 0) << extra.output;
    const auto extra_manifest = fixtures::read_file(value_of(extra.output, "checkpoint") + "/manifest.json");
    EXPECT_NE(extra_manifest.find("dense1.weight"), std::string::npos);
    EXPECT_NE(extra_manifest.find("fusion.weight"), std::string::npos);

    const auto base = run(p.config() + " eval --model baselines");
    ASSERT_EQ(base.status, 0) << base.output;
    EXPECT_NE(base.output.find("Mean mae="), std::string::npos) << base.output;
    EXPECT_NE(base.output.find("Linear_BoW mae="), std::string::npos) << base.output;
    const auto ev = run(p.config() + " eval --model regress+ord");
    ASSERT_EQ(ev.status, 0) << ev.output;
    EXPECT_NE(ev.output.find("mae="), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(value_of(ev.output, "table")));

    const auto st = run(p.config() + " stats");
    ASSERT_EQ(st.status, 0) << st.output;
    const auto table = fixtures::read_file(value_of(st.output, "table"));
    EXPECT_NE(table.find("p_hidden"), std::string::npos);
    EXPECT_TRUE(std::regex_search(table, std::regex("(^|\\n)\\|? *Add\\b"))) << table;

    const auto pr = run("predict --model " + quote(ord_ck) + " --text 'urgent road repairs'");
    ASSERT_EQ(pr.status, 0) << pr.output;
    const std::regex prob(R"(p\(count>=\d+\)=([0-9.]+))");
    std::size_t n = 0;
    for (auto it = std::sregex_iterator(pr.output.begin(), pr.output.end(), prob); it != std::sregex_iterator(); ++it) {
        const double v = std::stod((*it)[1].str());
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        ++n;
    }
    EXPECT_EQ(n, 5u) << pr.output;
    EXPECT_GT(std::stod(value_of(pr.output, "predicted_count")), 0.0);

    const auto empty = run(p.config() + " predict --text ''");
    ASSERT_EQ(empty.status, 0) << empty.output;
    EXPECT_NE(empty.output.find("no known tokens"), std::string::npos) << empty.output;
    EXPECT_FALSE(value_of(empty.output, "predicted_count").empty());

    // A config for another scheme cannot reuse the UK checkpoint.
    p.write_config("us.json", "us");
    const auto mismatch = run(p.config("us.json") + " eval --model " + quote(ord_ck));
    EXPECT_EQ(mismatch.status, 1);
    EXPECT_NE(mismatch.output.find("scheme"), std::string::npos) << mismatch.output;
}

TEST(Cli, SeedOverrideChangesTraining) {
    Project p(120);
    ASSERT_EQ(run(p.config() + " prepare").status, 0);
    const auto a = run(p.config() + " --seed 1 train --variant regress");
    ASSERT_EQ(a.status, 0) << a.output;
    const auto ha = fixtures::read_file(value_of(a.output, "history"));
    const auto b = run(p.config() + " --seed 2 train --variant regress");
    ASSERT_EQ(b.status, 0) << b.output;
    EXPECT_NE(fixtures::read_file(value_of(b.output, "history")), ha);
}

TEST(Cli, UsSchemeDropsSmallPetitionsAndOmitsAdd) {
    Project p(400, "us");
    std::size_t small = 0;
    for (const auto &q : p.petitions) small += q.signature_count <= 150 ? 1 : 0;
    ASSERT_GT(small, 0u);
    const auto prep = run(p.config() + " prepare");
    ASSERT_EQ(prep.status, 0) << prep.output;
    EXPECT_NE(prep.output.find("dropped=" + std::to_string(small)), std::string::npos) << prep.output;
    EXPECT_NE(prep.output.find("dropped " + std::to_string(small)), std::string::npos) << prep.output;
    ASSERT_EQ(run(p.config() + " train --variant regress+ord").status, 0);
    const auto st = run(p.config() + " stats");
    ASSERT_EQ(st.status, 0) << st.output;
    const auto table = fixtures::read_file(value_of(st.output, "table"));
    EXPECT_FALSE(std::regex_search(table, std::regex("(^|\\n)\\|? *Add\\b"))) << table;
    EXPECT_NE(table.find("Pol"), std::string::npos) << table;
}

TEST(Cli, DivergentTrainingExitsWithTwo) {
    Project p(120, "uk", R"(, "learning_rate": 1e300)");
    ASSERT_EQ(run(p.config() + " prepare").status, 0);
    const auto r = run(p.config() + " train --variant regress");
    EXPECT_EQ(r.status, 2) << r.output;
}
