#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ridgekit/ridgekit.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace ridgekit;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string(RIDGEKIT_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  RunResult result;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0)
    result.stdout_text.append(buf, got);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ridgekit_cli_test_" +
            std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()
                      ->current_test_info()
                      ->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_file(const std::string& name, const std::string& body) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    out << body;
    return p.string();
  }

  fs::path dir_;
};

TEST_F(CliTest, FitIdentityDesign) {
  const std::string input = write_file("id.csv", "x1,x2,y\n1,0,2\n0,1,4\n");
  const RunResult r = run_cli("fit --input " + input +
                              " --target y --lambda 1 --no-intercept");
  EXPECT_EQ(r.exit_code, 0);
  std::istringstream is(r.stdout_text);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "term,value");
  std::getline(is, line);
  EXPECT_EQ(line, "x1,1");
  std::getline(is, line);
  EXPECT_EQ(line, "x2,2");
}

TEST_F(CliTest, ByteIdenticalReruns) {
  std::ostringstream body;
  body << "a,b,c,y\n";
  for (int i = 0; i < 25; ++i) {
    body << format_double(counter_normal(7, 0, i, 0)) << ","
         << format_double(counter_normal(7, 0, i, 1)) << ","
         << format_double(counter_normal(7, 0, i, 2)) << ","
         << format_double(counter_normal(7, 1, i, 0)) << "\n";
  }
  const std::string input = write_file("data.csv", body.str());
  const std::string args =
      "fit --input " + input + " --target y --lambda 0.5 --standardize";
  const RunResult a = run_cli(args);
  const RunResult b = run_cli(args);
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.stdout_text, b.stdout_text);
  EXPECT_FALSE(a.stdout_text.empty());

  const std::string cv_args = "cv --input " + input +
                              " --target y --method kfold --k 5 "
                              "--lambda-grid 0.01:10:8-log --seed 3";
  EXPECT_EQ(run_cli(cv_args).stdout_text, run_cli(cv_args).stdout_text);
}

TEST_F(CliTest, MissingCellIsIngestionError) {
  const std::string input =
      write_file("na.csv", "x1,x2,y\n1,0,2\n0,NA,4\n");
  const std::string cmd = "fit --input " + input + " --target y --lambda 1";
  const RunResult r = run_cli(cmd);
  EXPECT_EQ(r.exit_code, 2);
  // the message goes to stderr; re-run capturing it
  const std::string with_err = std::string(RIDGEKIT_CLI_PATH) + " " + cmd +
                               " 2>&1 1>/dev/null";
  FILE* pipe = popen(with_err.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string err;
  char buf[512];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) err.append(buf, got);
  pclose(pipe);
  EXPECT_NE(err.find("row 3"), std::string::npos) << err;
  EXPECT_NE(err.find("'x2'"), std::string::npos) << err;
}

TEST_F(CliTest, UsageErrors) {
  const std::string input = write_file("d.csv", "x,y\n1,2\n2,3\n3,4\n");
  EXPECT_EQ(run_cli("fit --input " + input + " --target nope --lambda 1")
                .exit_code,
            2);
  EXPECT_EQ(run_cli("cv --input " + input + " --target y --method loo")
                .exit_code,
            2);  // no lambda grid
  EXPECT_EQ(run_cli("cv --input " + input +
                    " --target y --method loo-min-norm --no-intercept")
                .exit_code,
            2);  // needs p > n
  EXPECT_EQ(run_cli("fit --input " + input + " --target y").exit_code, 2);
  EXPECT_EQ(run_cli("no-such-command").exit_code, 2);
  EXPECT_EQ(run_cli("fit --input /does/not/exist.csv --target y --lambda 1")
                .exit_code,
            2);
}

TEST_F(CliTest, NumericalFailureExitCode) {
  // lambda = 0 with duplicated columns: rank-deficient OLS
  const std::string input =
      write_file("rank.csv", "x1,x2,y\n1,2,1\n2,4,2\n3,6,5\n");
  const RunResult r = run_cli("fit --input " + input +
                              " --target y --lambda 0 --no-intercept");
  EXPECT_EQ(r.exit_code, 1);
}

TEST_F(CliTest, KfoldAtNMatchesLoo) {
  std::ostringstream body;
  body << "a,b,y\n";
  for (int i = 0; i < 12; ++i)
    body << format_double(counter_normal(9, 0, i, 0)) << ","
         << format_double(counter_normal(9, 0, i, 1)) << ","
         << format_double(counter_normal(9, 1, i, 0)) << "\n";
  const std::string input = write_file("cv.csv", body.str());
  const std::string grid = "--lambdas 0.1,1,10";
  const RunResult loo = run_cli("cv --input " + input +
                                " --target y --method loo " + grid);
  const RunResult kf = run_cli("cv --input " + input +
                               " --target y --method kfold --k 12 " + grid);
  ASSERT_EQ(loo.exit_code, 0);
  ASSERT_EQ(kf.exit_code, 0);
  std::istringstream ls(loo.stdout_text), ks(kf.stdout_text);
  const TabularFile lt = read_csv(ls), kt = read_csv(ks);
  ASSERT_EQ(lt.rows(), 3);
  for (Index i = 0; i < 3; ++i)
    EXPECT_NEAR(lt.values(i, 1), kt.values(i, 1),
                1e-9 * std::max(1.0, lt.values(i, 1)));
}

TEST_F(CliTest, LooMinNormMatchesBruteForceRefits) {
  const Index n = 8, p = 20;
  std::ostringstream body;
  for (Index j = 0; j < p; ++j) body << "x" << j << ",";
  body << "y\n";
  const Matrix x = rk_test::random_matrix(n, p, 21);
  const Vector y = rk_test::random_vector(n, 22);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) body << format_double(x(i, j)) << ",";
    body << format_double(y(i)) << "\n";
  }
  const std::string input = write_file("wide.csv", body.str());
  const RunResult r = run_cli("cv --input " + input +
                              " --target y --method loo-min-norm "
                              "--no-intercept");
  ASSERT_EQ(r.exit_code, 0);
  std::istringstream is(r.stdout_text);
  const TabularFile t = read_csv(is);
  const double got = t.values(0, 1);

  double want = 0.0;
  for (Index i = 0; i < n; ++i) {
    Matrix xs(n - 1, p);
    Vector ys(n - 1);
    Index r2 = 0;
    for (Index k = 0; k < n; ++k) {
      if (k == i) continue;
      xs.row(r2) = x.row(k);
      ys(r2) = y(k);
      ++r2;
    }
    const MinNormFit fit = min_norm_fit(make_dataset(xs, ys));
    want += std::pow(y(i) - x.row(i).dot(fit.coefficients), 2);
  }
  want /= static_cast<double>(n);
  EXPECT_NEAR(got, want, 1e-5 * std::max(1.0, want));
}

TEST_F(CliTest, CompleteFullyObservedEqualsAlternatingRidge) {
  const Matrix x = rk_test::random_matrix(6, 5, 23);
  std::ostringstream body;
  body << "c1,c2,c3,c4,c5\n";
  for (Index i = 0; i < 6; ++i) {
    for (Index j = 0; j < 5; ++j) {
      if (j) body << ",";
      body << format_double(x(i, j));
    }
    body << "\n";
  }
  const std::string input = write_file("m.csv", body.str());
  const RunResult r = run_cli("complete --input " + input +
                              " --lambda 1.5 --rank 4 --seed 9");
  ASSERT_EQ(r.exit_code, 0);
  std::istringstream is(r.stdout_text);
  const TabularFile t = read_csv(is);

  MaskedMatrix masked;
  masked.values = x;
  masked.observed.setConstant(6, 5, true);
  const FactorPair want = soft_impute(masked, 1.5, 4, 1e-7, 500, 9);
  EXPECT_LT((t.values - want.product()).norm(), 1e-12);
  const FactorPair ar = alternating_ridge(x, 4, 1.5, 1e-7, 500, 9);
  EXPECT_LT((t.values - ar.product()).norm(), 1e-6);
}

TEST_F(CliTest, CompleteRecoversSeededLowRankFile) {
  // the pinned rank-3 instance with 30% missing, written as a CSV with NAs
  const std::uint64_t seed = 374;
  const Matrix a = rk_test::random_matrix(50, 3, seed, 40);
  const Matrix b = rk_test::random_matrix(40, 3, seed, 41);
  const Matrix signal = a * b.transpose();
  const double var = (signal.array() - signal.mean()).square().mean();
  const double noise_sd = std::sqrt(var / 10.0);
  Matrix noisy = signal;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed(50, 40);
  std::ostringstream body;
  for (Index j = 0; j < 40; ++j) body << (j ? "," : "") << "c" << j;
  body << "\n";
  for (Index i = 0; i < 50; ++i) {
    for (Index j = 0; j < 40; ++j) {
      noisy(i, j) += noise_sd * counter_normal(seed, 42, i, j);
      observed(i, j) = counter_uniform(seed, 43, i, j) >= 0.3;
      if (j) body << ",";
      body << (observed(i, j) ? format_double(noisy(i, j)) : "NA");
    }
    body << "\n";
  }
  const std::string input = write_file("lowrank.csv", body.str());
  const RunResult r = run_cli("complete --input " + input +
                              " --lambda 4 --rank 5 --seed 3");
  ASSERT_EQ(r.exit_code, 0);
  std::istringstream is(r.stdout_text);
  const TabularFile t = read_csv(is);
  double err = 0.0, denom = 0.0;
  for (Index i = 0; i < 50; ++i)
    for (Index j = 0; j < 40; ++j) {
      if (observed(i, j)) continue;
      err += std::pow(t.values(i, j) - signal(i, j), 2);
      denom += std::pow(signal(i, j), 2);
    }
  EXPECT_LT(std::sqrt(err / denom), 0.2);
}

TEST_F(CliTest, CompleteErrorContracts) {
  const std::string all_missing =
      write_file("allna.csv", "a,b\nNA,NA\nNA,NA\n");
  EXPECT_EQ(run_cli("complete --input " + all_missing +
                    " --lambda 1 --rank 1 --seed 1")
                .exit_code,
            2);
  // single observed entry with a huge penalty: near-zero completion
  const std::string one =
      write_file("one.csv", "a,b,c\nNA,7,NA\nNA,NA,NA\n");
  const RunResult r = run_cli("complete --input " + one +
                              " --lambda 1e6 --rank 1 --seed 1");
  ASSERT_EQ(r.exit_code, 0);
  std::istringstream is(r.stdout_text);
  const TabularFile t = read_csv(is);
  EXPECT_LT(t.values.norm(), 1e-3);
}

TEST_F(CliTest, CompleteObservedReport) {
  const std::string input = write_file("rep.csv", "a,b\n1,NA\n2,3\n");
  const std::string report = (dir_ / "report.csv").string();
  const RunResult r = run_cli("complete --input " + input +
                              " --lambda 0.5 --rank 1 --seed 2 --report " +
                              report);
  ASSERT_EQ(r.exit_code, 0);
  std::ifstream rep(report);
  ASSERT_TRUE(rep.good());
  const TabularFile t = read_csv(rep);
  EXPECT_EQ(t.rows(), 3);  // three observed cells
  EXPECT_EQ(t.header[2], "observed");
}

TEST_F(CliTest, GlmDualMatchesPrimal) {
  const Index n = 10, p = 30;
  std::ostringstream body;
  for (Index j = 0; j < p; ++j) body << "x" << j << ",";
  body << "y\n";
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j)
      body << format_double(counter_normal(31, 0, i, j)) << ",";
    body << (counter_uniform(31, 1, i, 0) < 0.5 ? 0 : 1) << "\n";
  }
  const std::string input = write_file("glm.csv", body.str());
  const RunResult primal = run_cli("glm-fit --input " + input +
                                   " --target y --family binomial "
                                   "--lambda 0.5");
  const RunResult dual = run_cli("glm-fit --input " + input +
                                 " --target y --family binomial "
                                 "--lambda 0.5 --dual");
  ASSERT_EQ(primal.exit_code, 0);
  ASSERT_EQ(dual.exit_code, 0);
  std::istringstream ps(primal.stdout_text), ds(dual.stdout_text);
  std::string pline, dline;
  std::getline(ps, pline);
  std::getline(ds, dline);
  int checked = 0;
  while (std::getline(ps, pline) && std::getline(ds, dline)) {
    const auto pc = pline.find(','), dc = dline.find(',');
    ASSERT_EQ(pline.substr(0, pc), dline.substr(0, dc));
    const double pv = std::stod(pline.substr(pc + 1));
    const double dv = std::stod(dline.substr(dc + 1));
    EXPECT_NEAR(pv, dv, 1e-6 * std::max(1.0, std::abs(pv)));
    ++checked;
  }
  EXPECT_EQ(checked, p + 2);  // intercept + p coefficients + deviance
}

TEST_F(CliTest, ExperimentOutputsRoundTrip) {
  const std::string out_path = (dir_ / "bv.csv").string();
  const RunResult r = run_cli(
      "experiment bias-variance --n 40 --p 8 --seed 4 --grid-points 10 "
      "--out " +
      out_path);
  ASSERT_EQ(r.exit_code, 0);
  std::ifstream in(out_path);
  ASSERT_TRUE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  std::istringstream is(buf.str());
  const TabularFile t = read_csv(is);
  EXPECT_EQ(t.rows(), 11);  // 10 ridge rows + James-Stein reference row
  // the reference row is marked by its missing lambda
  EXPECT_TRUE(t.missing(10, 0));
  EXPECT_FALSE(t.missing(10, 2));

  // identical rerun writes identical bytes
  const std::string out2 = (dir_ / "bv2.csv").string();
  run_cli(
      "experiment bias-variance --n 40 --p 8 --seed 4 --grid-points 10 "
      "--out " +
      out2);
  std::ifstream a(out_path), b(out2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
}

}  // namespace
