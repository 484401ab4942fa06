#include "kleinman/problems_io.h"

#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "kleinman/cli.h"
#include "kleinman/random.h"
#include "kleinman/semigroup.h"

namespace kleinman {
namespace {

template <typename F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no kleinman::Error thrown";
  return Error(ErrorCode::kInvalidArgument, "none");
}

bool mentions(const Error& e, const std::string& field) {
  return std::string(e.what()).find("\"" + field + "\"") != std::string::npos;
}

TEST(ParseProblemTest, MinimalScalar) {
  const ProblemFile p =
      parse_problem(R"({"n":1,"m":1,"p":1,"A":[[-1]],"B":[[1]],"C":[[1]]})");
  EXPECT_EQ(p.mode, ProblemMode::kRiccati);
  EXPECT_EQ(p.n, 1);
  EXPECT_EQ((*p.a)(0, 0), -1.0);
  const StateSpaceSystem sys = p.system();
  EXPECT_EQ(sys.b()(0, 0), 1.0);
}

TEST(ParseProblemTest, FlatArraysAndExponents) {
  const ProblemFile p = parse_problem(
      R"({"n":2,"m":1,"p":1,"A":[-1e0,0,0,-2.5E+0],"B":[1,0],"C":[[0,1]]})");
  EXPECT_EQ((*p.a)(1, 1), -2.5);
  EXPECT_EQ((*p.b)(0, 0), 1.0);
}

TEST(ParseProblemTest, FieldLevelErrors) {
  Error e = error_of([] {
    parse_problem(R"({"n":2,"m":1,"p":1,"A":[[1,0],[0,1]],"B":[[1]],"C":[[1,0]]})");
  });
  EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  EXPECT_TRUE(mentions(e, "B")) << e.what();

  e = error_of([] {
    parse_problem(R"({"mode":"sqrt","n":1,"N":[[1]],"Q":[[1]]})");
  });
  EXPECT_EQ(e.code(), ErrorCode::kMissingField);
  EXPECT_TRUE(mentions(e, "a")) << e.what();

  e = error_of([] { parse_problem(R"({"n":1,"m":1,"p":1,"A":[[-1]],)"); });
  EXPECT_EQ(e.code(), ErrorCode::kParseError);

  e = error_of([] {
    parse_problem(R"({"n":1,"m":1,"p":1,"A":[["x"]],"B":[[1]],"C":[[1]]})");
  });
  EXPECT_TRUE(mentions(e, "A")) << e.what();

  e = error_of([] { parse_problem(R"({"m":1,"p":1})"); });
  EXPECT_EQ(e.code(), ErrorCode::kMissingField);
  EXPECT_TRUE(mentions(e, "n")) << e.what();
}

TEST(LoadProblemTest, MissingFileIsInputError) {
  const Error e = error_of([] { load_problem("/nonexistent/problem.json"); });
  EXPECT_TRUE(is_input_error(e.code()));
}

TEST(WriteProblemTest, RoundTripIsFieldForField) {
  std::mt19937_64 rng(1);
  for (const ProblemFile& original : bundled_corpus()) {
    const ProblemFile back = parse_problem(write_problem(original));
    EXPECT_EQ(back.name, original.name);
    EXPECT_EQ(back.mode, original.mode);
    EXPECT_EQ(back.n, original.n);
    EXPECT_EQ(back.m, original.m);
    EXPECT_EQ(back.p, original.p);
    EXPECT_EQ(back.expected_exit, original.expected_exit);
    EXPECT_EQ(back.reg_a, original.reg_a);
    for (auto [x, y] : {std::pair{&back.a, &original.a},
                        {&back.b, &original.b},
                        {&back.c, &original.c},
                        {&back.k0, &original.k0},
                        {&back.n_mat, &original.n_mat},
                        {&back.q_mat, &original.q_mat}}) {
      ASSERT_EQ(x->has_value(), y->has_value()) << original.name;
      if (x->has_value()) EXPECT_EQ(**x, **y) << original.name;
    }
  }
}

TEST(WriteProblemTest, BitFaithfulDoubles) {
  std::mt19937_64 rng(2);
  ProblemFile p;
  p.name = "random";
  p.n = 3;
  p.m = 2;
  p.p = 1;
  p.a = random_gaussian(3, 3, rng) * 1e-7;
  p.b = random_gaussian(3, 2, rng) * 1e9;
  p.c = random_gaussian(1, 3, rng);
  const ProblemFile back = parse_problem(write_problem(p));
  EXPECT_EQ(*back.a, *p.a);
  EXPECT_EQ(*back.b, *p.b);
  EXPECT_EQ(*back.c, *p.c);
}

TEST(ResultFileTest, RoundTripAndDeterminism) {
  const ProblemFile p = bundled_corpus().front();
  SolverConfig cfg;
  cfg.oracle = true;
  cfg.seed = 17;
  const ResultFile r1 = run_problem(p, cfg);
  const ResultFile r2 = run_problem(p, cfg);
  const std::string text = write_result(r1);
  EXPECT_EQ(text, write_result(r2));

  const ResultFile back = parse_result(text);
  EXPECT_EQ(back.p, r1.p);
  EXPECT_EQ(back.iterations, r1.iterations);
  EXPECT_EQ(back.stop_reason, r1.stop_reason);
  EXPECT_EQ(back.config.seed, 17u);
  EXPECT_TRUE(back.config.oracle);
  EXPECT_EQ(back.trace.steps.size(), r1.trace.steps.size());

  // Replaying the echoed config reproduces P.
  const ResultFile replay = run_problem(p, back.config);
  EXPECT_LE((replay.p - r1.p).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ResultFileTest, NanBecomesNull) {
  ResultFile r;
  r.name = "x";
  r.mode = "riccati";
  r.p = Matrix::Zero(1, 1);
  r.residual = std::nan("");
  EXPECT_NE(write_result(r).find("\"residual\": null"), std::string::npos);
}

TEST(TraceCsvTest, Header) {
  IterationTrace t;
  t.steps.push_back({0, 1.0, 0.5, -1.0, std::nan(""), std::nan("")});
  const std::string csv = write_trace_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "step,residual,stepGap,abscissa,errorToOracle");
  EXPECT_NE(csv.find("\n0,"), std::string::npos);
}

TEST(HeatDemoTest, Examples) {
  const StateSpaceSystem stable = heat_demo(3, 0.0, 1.0, {0}, {2});
  const double h = 0.25;
  for (int k = 1; k <= 3; ++k) {
    const double lam = (-2.0 + 2.0 * std::cos(k * M_PI * h)) / (h * h);
    EXPECT_LT(lam, 0.0);
  }
  EXPECT_NEAR(spectral_abscissa(stable.a()).abscissa,
              (-2.0 + 2.0 * std::cos(M_PI * h)) / (h * h), 1e-10);
  EXPECT_FALSE(spectral_abscissa(heat_demo(3, 20.0, 1.0, {0}, {2}).a()).is_stable);
  const StateSpaceSystem full = heat_demo(3, 50.0, 1.0, {0, 1, 2}, {0});
  EXPECT_TRUE(hautus_stabilizable(full.a(), full.b()));
}

TEST(HeatDemoTest, ShiftForAbscissa) {
  const double c = heat_shift_for_abscissa(32, 1.0, 5.0);
  EXPECT_NEAR(spectral_abscissa(heat_demo(32, c, 1.0, {0}, {31}).a()).abscissa,
              5.0, 1e-8);
}

TEST(HeatDemoTest, IndexOutOfRange) {
  EXPECT_THROW(heat_demo(4, 0.0, 1.0, {4}, {0}), Error);
  EXPECT_THROW(heat_demo(4, 0.0, 1.0, {0}, {-1}), Error);
}

TEST(BundledCorpusTest, ContentsAndExitCodes) {
  const std::vector<ProblemFile> corpus = bundled_corpus();
  EXPECT_GE(corpus.size(), 12u);
  int heat = 0, sqrt_cases = 0, negative = 0;
  for (const ProblemFile& p : corpus) {
    heat += p.name.rfind("heat-", 0) == 0;
    sqrt_cases += p.mode == ProblemMode::kSqrt;
    int code = kExitOk;
    try {
      run_problem(p, {});
    } catch (const Error& e) {
      code = exit_code_for(e);
    }
    negative += code != kExitOk;
    EXPECT_EQ(code, p.expected_exit.value_or(kExitOk)) << p.name;
  }
  EXPECT_EQ(heat, 6);
  EXPECT_GE(sqrt_cases, 2);
  EXPECT_GE(negative, 1);
}

}  // namespace
}  // namespace kleinman
