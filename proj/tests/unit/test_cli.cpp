#include "bislab/cli.hpp"
#include "bislab/csv.hpp"
#include "bislab/experiment.hpp"
#include "bislab/report.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bislab;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig =
    "[data]\nk = 3\nn1 = 30\nlambda = 5\nbeta = 1\ndim = 4\ntest_per_class = 20\n"
    "[train]\nepochs = 2\nsteps_per_epoch = 10\nbatch_labeled = 16\nbatch_unlabeled = 16\n"
    "hidden = 8\ntau = 0.6\n"
    "[finetune]\nepochs = 1\n";

struct Cli {
    int code;
    std::string out;
    std::string err;
};

Cli run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("bislab_cli_" + std::string(info->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        config_ = (dir_ / "tiny.ini").string();
        std::ofstream(config_) << kTinyConfig;
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string out_dir(const std::string& name = "out") const { return (dir_ / name).string(); }

    fs::path dir_;
    std::string config_;
};

csv::Table read(const fs::path& p) { return csv::read_table_file(p.string()); }

std::string json_field(const fs::path& p, const std::string& key) {
    std::ifstream in(p);
    return nlohmann::json::parse(in).at(key).get<std::string>();
}

} // namespace

TEST_F(CliTest, GenBalancedAndReproducible) {
    const std::string a = (dir_ / "a.txt").string(), b = (dir_ / "b.txt").string();
    auto r = run({"gen", a, "-c", config_, "--set", "data.lambda=1", "--data-seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(a).find("labeled_counts,30,30,30"), std::string::npos);
    ASSERT_EQ(run({"gen", b, "-c", config_, "--set", "data.lambda=1", "--data-seed", "3"}).code, 0);
    EXPECT_EQ(slurp(a), slurp(b));
}

TEST_F(CliTest, GenErrors) {
    const std::string path = (dir_ / "d.txt").string();
    auto r = run({"gen", path, "--set", "data.n1=10", "--set", "data.lambda=40"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("round(n1 / lambda)"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path));

    ASSERT_EQ(run({"gen", path, "-c", config_}).code, 0);
    r = run({"gen", path, "-c", config_});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--force"), std::string::npos);
    EXPECT_EQ(run({"gen", path, "-c", config_, "--force"}).code, 0);
}

TEST_F(CliTest, UsageAndConfigErrors) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"train", "--bogus"}).code, 1);
    EXPECT_EQ(run({"train", "--set", "train.nope=1", "-o", out_dir()}).code, 1);
    EXPECT_EQ(run({"train", "-c", (dir_ / "missing.ini").string()}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, TrainSmokeWritesRecordCheckpointAndRows) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run({"train", "-c", config_, "--set", "train.epochs=1", "-o", out_dir()});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(secs, 5.0);

    const OutputDir out{out_dir()};
    const auto summary = read(out.summary_csv());
    EXPECT_EQ(summary.header, summary_header());
    ASSERT_EQ(summary.rows.size(), 1u);
    const std::string id = summary.rows[0][0];
    EXPECT_TRUE(fs::exists(out.checkpoint(id)));

    std::ifstream in(out.run_json(id));
    const auto j = nlohmann::json::parse(in);
    for (const char* key : {"run_id", "stage", "seed", "data", "config", "history", "final",
                            "feature_hash", "parameter_hash"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["stage"], "joint");
    EXPECT_EQ(j["history"].size(), 1u);
    EXPECT_EQ(j["final"]["per_class_recall"].size(), 3u);

    const auto per_class = read(out.per_class_csv());
    EXPECT_EQ(per_class.header, per_class_header());
    EXPECT_EQ(per_class.rows.size(), 3u);
}

TEST_F(CliTest, RepeatedTrainIsByteIdenticalAndGuarded) {
    ASSERT_EQ(run({"train", "-c", config_, "-o", out_dir()}).code, 0);
    const OutputDir out{out_dir()};
    const std::string id = read(out.summary_csv()).rows[0][0];
    const std::string first = slurp(out.run_json(id));
    EXPECT_EQ(run({"train", "-c", config_, "-o", out_dir()}).code, 1);
    ASSERT_EQ(run({"train", "-c", config_, "-o", out_dir(), "--force"}).code, 0);
    EXPECT_EQ(slurp(out.run_json(id)), first);
}

TEST_F(CliTest, FinetuneKeepsFeatureHash) {
    ASSERT_EQ(run({"train", "-c", config_, "-o", out_dir()}).code, 0);
    const OutputDir out{out_dir()};
    const std::string id = read(out.summary_csv()).rows[0][0];
    auto r = run({"finetune", "-c", config_, "-o", out_dir(), "--checkpoint",
                  out.checkpoint(id).string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto summary = read(out.summary_csv());
    ASSERT_EQ(summary.rows.size(), 2u);
    const std::string ft = summary.rows[1][0];
    EXPECT_EQ(summary.rows[1][1], "finetune");
    EXPECT_EQ(summary.rows[1][summary.column("labeled_sampler")], "random");
    EXPECT_EQ(json_field(out.run_json(ft), "feature_hash"), json_field(out.run_json(id), "feature_hash"));
    EXPECT_NE(json_field(out.run_json(ft), "parameter_hash"),
              json_field(out.run_json(id), "parameter_hash"));

    EXPECT_EQ(run({"finetune", "-c", config_, "-o", out_dir(), "--checkpoint",
                   (dir_ / "none.ckpt").string()})
                  .code,
              2);
}

TEST_F(CliTest, EqualBisOfMeanSamplersMatchesMeanTraining) {
    ASSERT_EQ(run({"train", "-c", config_, "-o", out_dir(), "--set", "train.labeled_sampler=mean",
                   "--set", "train.unlabeled_sampler=mean"})
                  .code,
              0);
    ASSERT_EQ(run({"bis", "-c", config_, "-o", out_dir(), "--set", "bis.schedule=equal", "--set",
                   "bis.sampler_a=mean", "--set", "bis.sampler_b=mean"})
                  .code,
              0);
    const OutputDir out{out_dir()};
    const auto summary = read(out.summary_csv());
    ASSERT_EQ(summary.rows.size(), 2u);
    EXPECT_EQ(summary.rows[1][summary.column("schedule")], "equal");
    EXPECT_EQ(summary.rows[0][summary.column("schedule")], "none");
    EXPECT_EQ(json_field(out.run_json(summary.rows[0][0]), "parameter_hash"),
              json_field(out.run_json(summary.rows[1][0]), "parameter_hash"));
}

TEST_F(CliTest, OutputDirFromEnvironment) {
    ::setenv("BIS_LAB_OUT", out_dir("env").c_str(), 1);
    const auto r = run({"train", "-c", config_, "--set", "train.epochs=0"});
    ::unsetenv("BIS_LAB_OUT");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(OutputDir{out_dir("env")}.summary_csv()));
    EXPECT_EQ(resolve_output_dir("x"), fs::path("x"));
    EXPECT_EQ(resolve_output_dir(""), fs::path("bislab_out"));
}

TEST_F(CliTest, GridCountsRowsAndResumes) {
    const std::vector<std::string> base = {"grid", "-c", config_, "-o", out_dir(), "-q",
                                           "--set", "grid.lambdas=5", "--set", "grid.betas=1",
                                           "--set", "grid.seeds=1,2"};
    auto r = run(base);
    ASSERT_EQ(r.code, 0) << r.err;
    const OutputDir out{out_dir()};
    const auto summary = read(out.summary_csv());
    EXPECT_EQ(summary.rows.size(), 2u);
    EXPECT_EQ(read(out.per_class_csv()).rows.size(), 2u * 2 * 3);
    EXPECT_NE(summary.rows[0][0], summary.rows[1][0]);

    EXPECT_EQ(run(base).code, 1);  // refuses to clobber

    auto resumed = base;
    resumed.push_back("--resume");
    r = run(resumed);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("0 completed, 2 skipped"), std::string::npos) << r.out;
    EXPECT_EQ(slurp(out.summary_csv()), [&] {
        std::ostringstream s;
        csv::write_table(s, summary);
        return s.str();
    }());
}

TEST_F(CliTest, GridOutputIndependentOfConcurrency) {
    const std::vector<std::string> base = {"grid", "-c", config_, "-q", "--set", "grid.lambdas=5,2",
                                           "--set", "grid.betas=1", "--set", "grid.seeds=1,2",
                                           "--set", "grid.finetune=true", "--set",
                                           "grid.schedules=parabolic"};
    auto serial = base, parallel = base;
    serial.insert(serial.end(), {"-o", out_dir("serial")});
    parallel.insert(parallel.end(), {"-o", out_dir("parallel"), "--jobs", "3"});
    ASSERT_EQ(run(serial).code, 0);
    ASSERT_EQ(run(parallel).code, 0);

    auto strip_wall = [](csv::Table t) {
        const auto w = t.column("wall_seconds");
        for (auto& row : t.rows)
            row[w] = "";
        return t;
    };
    const OutputDir a{out_dir("serial")}, b{out_dir("parallel")};
    const auto sa = strip_wall(read(a.summary_csv())), sb = strip_wall(read(b.summary_csv()));
    EXPECT_EQ(sa.rows, sb.rows);
    EXPECT_EQ(sa.rows.size(), 2u * 2 * 3);  // joint, finetune, bis per cell and seed
    EXPECT_EQ(slurp(a.per_class_csv()), slurp(b.per_class_csv()));
    for (const auto& row : sa.rows)
        EXPECT_EQ(slurp(a.run_json(row[0])), slurp(b.run_json(row[0])));
}

TEST_F(CliTest, GridResumesMissingFinetuneFromCheckpoint) {
    const std::vector<std::string> base = {"grid", "-c", config_, "-o", out_dir(), "-q",
                                           "--set", "grid.lambdas=5", "--set", "grid.betas=1",
                                           "--set", "grid.seeds=1", "--set", "grid.finetune=true"};
    ASSERT_EQ(run(base).code, 0);
    const OutputDir out{out_dir()};
    const auto summary = read(out.summary_csv());
    ASSERT_EQ(summary.rows.size(), 2u);
    const std::string ft = summary.rows[1][0];
    const std::string ft_json = slurp(out.run_json(ft));
    fs::remove(out.run_json(ft));

    auto resumed = base;
    resumed.push_back("--resume");
    const auto r = run(resumed);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("1 completed, 1 skipped"), std::string::npos) << r.out;
    EXPECT_EQ(slurp(out.run_json(ft)), ft_json);
}

TEST_F(CliTest, GridRecordsFailuresAndContinues) {
    const auto r = run({"grid", "-c", config_, "-o", out_dir(), "-q", "--set", "grid.lambdas=5",
                        "--set", "grid.betas=1", "--set", "grid.seeds=1", "--set",
                        "grid.pairs=random/random", "--set", "grid.schedules=parabolic", "--set",
                        "train.lr=1e300"});
    EXPECT_EQ(r.code, 2);
    const OutputDir out{out_dir()};
    const auto failures = read(out.failures_csv());
    EXPECT_EQ(failures.rows.size(), 2u);
    EXPECT_EQ(failures.rows[0][failures.column("status")], "failed");
    EXPECT_TRUE(read(out.summary_csv()).rows.empty());
}

TEST_F(CliTest, NinePairGridReportsNineRows) {
    std::string pairs;
    for (const char* a : {"random", "mean", "reverse"})
        for (const char* b : {"random", "mean", "reverse"})
            pairs += std::string(pairs.empty() ? "" : ",") + a + "/" + b;
    ASSERT_EQ(run({"grid", "-c", config_, "-o", out_dir(), "-q", "--set", "grid.lambdas=5",
                   "--set", "grid.betas=1", "--set", "grid.seeds=1,2", "--set",
                   "grid.pairs=" + pairs, "--set", "train.epochs=1", "--jobs", "2"})
                  .code,
              0);
    const OutputDir out{out_dir()};
    const auto r = run({"report", out.summary_csv().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = read(out.root / "report.csv");
    EXPECT_EQ(report.rows.size(), 9u);
    for (const auto& row : report.rows)
        EXPECT_EQ(row[report.column("n")], "2");
    EXPECT_NE(r.out.find("±"), std::string::npos);
}

TEST_F(CliTest, SummaryRowsRoundTrip) {
    ASSERT_EQ(run({"grid", "-c", config_, "-o", out_dir(), "-q", "--set", "grid.lambdas=5",
                   "--set", "grid.betas=1", "--set", "grid.seeds=1", "--set",
                   "grid.schedules=cosine"})
                  .code,
              0);
    const OutputDir out{out_dir()};
    for (const auto& path : {out.summary_csv(), out.per_class_csv()}) {
        std::istringstream lines(slurp(path));
        std::string line;
        while (std::getline(lines, line))
            EXPECT_EQ(csv::format_row(csv::parse_row(line)), line);
    }
}

TEST_F(CliTest, ReportErrors) {
    const fs::path empty = dir_ / "empty.csv";
    std::ofstream(empty).close();
    auto r = run({"report", empty.string()});
    EXPECT_NE(r.code, 0);
    EXPECT_FALSE(r.err.empty());

    const fs::path header_only = dir_ / "header.csv";
    {
        std::ofstream f(header_only);
        csv::write_table(f, {summary_header(), {}});
    }
    r = run({"report", header_only.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("no data rows"), std::string::npos) << r.err;
}

TEST(Report, HandFixtureMeanAndSd) {
    csv::Table t{summary_header(), {}};
    auto row = [&](const std::string& id, const std::string& seed, const std::string& acc) {
        csv::Row r(summary_header().size(), "0");
        r[0] = id;
        r[1] = "joint";
        r[2] = seed;
        r[5] = r[6] = "random";
        r[8] = "none";
        r[10] = acc;
        return r;
    };
    t.rows = {row("a", "1", "0.6"), row("b", "2", "0.8")};
    const auto groups = aggregate(t);
    ASSERT_EQ(groups.size(), 1u);
    EXPECT_EQ(groups[0].n, 2u);
    EXPECT_NEAR(groups[0].metrics[0].mean, 0.7, 1e-12);
    EXPECT_NEAR(groups[0].metrics[0].sd, std::sqrt(0.02), 1e-12);

    t.rows.pop_back();
    const auto single = aggregate(t);
    for (const auto& m : single[0].metrics)
        EXPECT_EQ(m.sd, 0.0);

    const auto table = report_table(groups);
    EXPECT_EQ(table.header.size(), report_group_columns().size() + 1 + 2 * report_metric_columns().size());
    EXPECT_EQ(table.rows[0][table.column("accuracy_mean")], csv::format_double(groups[0].metrics[0].mean));
}
