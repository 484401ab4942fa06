#include "kleinman/problems_io.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "kleinman/lyapunov.h"

#ifndef KLEINMAN_VERSION
#define KLEINMAN_VERSION "0.0.0"
#endif

namespace kleinman {

using nlohmann::json;

std::string_view version() { return KLEINMAN_VERSION; }

std::string_view to_string(ProblemMode mode) {
  switch (mode) {
    case ProblemMode::kRiccati: return "riccati";
    case ProblemMode::kLyapunov: return "lyapunov";
    case ProblemMode::kSqrt: return "sqrt";
  }
  return "unknown";
}

namespace {

// ---------------------------------------------------------------------------
// Reading

ProblemMode parse_mode(const std::string& s) {
  if (s == "riccati") return ProblemMode::kRiccati;
  if (s == "lyapunov") return ProblemMode::kLyapunov;
  if (s == "sqrt") return ProblemMode::kSqrt;
  throw Error(ErrorCode::kParseError,
              fmt::format("field \"mode\": unknown mode \"{}\" (expected "
                          "riccati, lyapunov or sqrt)",
                          s));
}

const json& require_field(const json& root, const char* field,
                          std::string_view context) {
  auto it = root.find(field);
  if (it == root.end() || it->is_null()) {
    throw Error(ErrorCode::kMissingField,
                fmt::format("field \"{}\" is required{}", field, context));
  }
  return *it;
}

double read_number(const json& v, std::string_view where) {
  if (!v.is_number()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("{} is not a number", where));
  }
  return v.get<double>();
}

Eigen::Index read_dim(const json& root, const char* field,
                      std::string_view context) {
  const json& v = require_field(root, field, context);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("field \"{}\" must be an integer", field));
  }
  const auto value = v.get<std::int64_t>();
  if (value < 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("field \"{}\" must be positive, got {}", field,
                            value));
  }
  return static_cast<Eigen::Index>(value);
}

Matrix read_matrix(const json& v, const char* field, Eigen::Index rows,
                   Eigen::Index cols) {
  if (!v.is_array()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("field \"{}\" must be an array", field));
  }
  Matrix out(rows, cols);
  const bool nested = !v.empty() && v.front().is_array();
  if (!nested) {
    if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("field \"{}\": expected {}x{} = {} entries, "
                              "got {}",
                              field, rows, cols, rows * cols, v.size()));
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        out(i, j) = read_number(
            v[static_cast<size_t>(i * cols + j)],
            fmt::format("field \"{}\" entry {}", field, i * cols + j));
      }
    }
    return out;
  }
  if (static_cast<Eigen::Index>(v.size()) != rows) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("field \"{}\": expected {} rows, got {}", field,
                            rows, v.size()));
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<size_t>(i)];
    if (!row.is_array()) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("field \"{}\": row {} is not an array", field,
                              i));
    }
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("field \"{}\": row {} has {} entries, expected "
                              "{}",
                              field, i, row.size(), cols));
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = read_number(
          row[static_cast<size_t>(j)],
          fmt::format("field \"{}\" entry [{}][{}]", field, i, j));
    }
  }
  return out;
}

std::optional<Matrix> read_optional_matrix(const json& root, const char* field,
                                           Eigen::Index rows,
                                           Eigen::Index cols) {
  auto it = root.find(field);
  if (it == root.end() || it->is_null()) return std::nullopt;
  return read_matrix(*it, field, rows, cols);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kParseError,
                fmt::format("cannot open \"{}\"", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("cannot write \"{}\"", path.string()));
  }
  out << text;
}

// ---------------------------------------------------------------------------
// Writing. nlohmann's serializer prints the shortest round-trip form; the
// file format promises 17 significant digits, so numbers are emitted here.

void emit(const json& j, std::string& out, int indent);

void emit_number(const json& j, std::string& out) {
  if (j.is_number_float()) {
    const double d = j.get<double>();
    out += std::isfinite(d) ? fmt::format("{:.17g}", d) : "null";
  } else {
    out += j.dump();
  }
}

bool is_flat(const json& j) {
  for (const auto& e : j) {
    if (e.is_array() || e.is_object()) return false;
  }
  return true;
}

void emit(const json& j, std::string& out, int indent) {
  const std::string pad(static_cast<size_t>(indent + 2), ' ');
  const std::string close_pad(static_cast<size_t>(indent), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad + json(it.key()).dump() + ": ";
      emit(it.value(), out, indent + 2);
    }
    out += "\n" + close_pad + "}";
  } else if (j.is_array()) {
    if (is_flat(j)) {
      out += "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ", ";
        first = false;
        emit(e, out, indent);
      }
      out += "]";
      return;
    }
    out += "[\n";
    bool first = true;
    for (const auto& e : j) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      emit(e, out, indent + 2);
    }
    out += "\n" + close_pad + "]";
  } else if (j.is_number()) {
    emit_number(j, out);
  } else {
    out += j.dump();
  }
}

std::string to_text(const json& j) {
  std::string out;
  emit(j, out, 0);
  out += "\n";
  return out;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json optional_number(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_or_nan(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return read_number(*it, fmt::format("field \"{}\"", field));
}

}  // namespace

StateSpaceSystem ProblemFile::system() const {
  if (!a) throw Error(ErrorCode::kMissingField, "field \"A\" is required");
  if (!b) throw Error(ErrorCode::kMissingField, "field \"B\" is required");
  if (!c) throw Error(ErrorCode::kMissingField, "field \"C\" is required");
  return StateSpaceSystem(*a, *b, *c);
}

ProblemFile parse_problem(std::string_view json_text) {
  const json root = parse_json(json_text);
  if (!root.is_object()) {
    throw Error(ErrorCode::kParseError, "problem file must be a JSON object");
  }
  ProblemFile out;
  if (auto it = root.find("name"); it != root.end()) {
    if (!it->is_string()) {
      throw Error(ErrorCode::kParseError, "field \"name\" must be a string");
    }
    out.name = it->get<std::string>();
  }
  if (auto it = root.find("mode"); it != root.end()) {
    if (!it->is_string()) {
      throw Error(ErrorCode::kParseError, "field \"mode\" must be a string");
    }
    out.mode = parse_mode(it->get<std::string>());
  }
  if (auto it = root.find("expectedExit"); it != root.end()) {
    if (!it->is_number_integer()) {
      throw Error(ErrorCode::kParseError,
                  "field \"expectedExit\" must be an integer");
    }
    out.expected_exit = it->get<int>();
  }

  const std::string ctx = fmt::format(" in {} mode", to_string(out.mode));
  out.n = read_dim(root, "n", ctx);
  switch (out.mode) {
    case ProblemMode::kRiccati:
      out.m = read_dim(root, "m", ctx);
      out.p = read_dim(root, "p", ctx);
      out.a = read_matrix(require_field(root, "A", ctx), "A", out.n, out.n);
      out.b = read_matrix(require_field(root, "B", ctx), "B", out.n, out.m);
      out.c = read_matrix(require_field(root, "C", ctx), "C", out.p, out.n);
      out.k0 = read_optional_matrix(root, "K0", out.m, out.n);
      break;
    case ProblemMode::kLyapunov:
      out.a = read_matrix(require_field(root, "A", ctx), "A", out.n, out.n);
      out.q_mat = read_optional_matrix(root, "Q", out.n, out.n);
      if (!out.q_mat) {
        out.p = read_dim(root, "p", " in lyapunov mode without Q");
        out.c = read_matrix(require_field(root, "C", " in lyapunov mode "
                                                     "without Q"),
                            "C", out.p, out.n);
      }
      break;
    case ProblemMode::kSqrt:
      out.reg_a = read_number(require_field(root, "a", ctx), "field \"a\"");
      out.n_mat = read_matrix(require_field(root, "N", ctx), "N", out.n, out.n);
      out.q_mat = read_matrix(require_field(root, "Q", ctx), "Q", out.n, out.n);
      break;
  }
  return out;
}

ProblemFile load_problem(const std::filesystem::path& path) {
  ProblemFile out = parse_problem(read_file(path));
  if (out.name.empty()) out.name = path.stem().string();
  return out;
}

std::string write_problem(const ProblemFile& problem) {
  json root = json::object();
  root["name"] = problem.name;
  root["mode"] = std::string(to_string(problem.mode));
  root["n"] = problem.n;
  if (problem.m > 0) root["m"] = problem.m;
  if (problem.p > 0) root["p"] = problem.p;
  if (problem.a) root["A"] = matrix_json(*problem.a);
  if (problem.b) root["B"] = matrix_json(*problem.b);
  if (problem.c) root["C"] = matrix_json(*problem.c);
  if (problem.k0) root["K0"] = matrix_json(*problem.k0);
  if (problem.reg_a) root["a"] = *problem.reg_a;
  if (problem.n_mat) root["N"] = matrix_json(*problem.n_mat);
  if (problem.q_mat) root["Q"] = matrix_json(*problem.q_mat);
  if (problem.expected_exit) root["expectedExit"] = *problem.expected_exit;
  return to_text(root);
}

void save_problem(const ProblemFile& problem,
                  const std::filesystem::path& path) {
  write_file(path, write_problem(problem));
}

std::string write_result(const ResultFile& r) {
  json root = json::object();
  root["name"] = r.name;
  root["mode"] = r.mode;
  root["solverVersion"] = r.version;
  root["seed"] = r.config.seed;
  root["config"] = {{"relTol", r.config.rel_tol},
                    {"stepTol", r.config.step_tol},
                    {"monTol", r.config.mon_tol},
                    {"maxIter", r.config.max_iter},
                    {"method", std::string(to_string(r.config.method))},
                    {"oracle", r.config.oracle},
                    {"seed", r.config.seed}};
  root["P"] = matrix_json(r.p);
  root["K"] = r.k ? matrix_json(*r.k) : json(nullptr);
  root["residual"] = optional_number(r.residual);
  root["relativeResidual"] = optional_number(r.relative_residual);
  root["iterations"] = r.iterations;
  if (!r.stop_reason.empty()) root["stopReason"] = r.stop_reason;
  root["kappa"] = r.kappa ? optional_number(*r.kappa) : json(nullptr);
  root["closedLoopAbscissa"] = r.closed_loop_abscissa
                                   ? optional_number(*r.closed_loop_abscissa)
                                   : json(nullptr);
  json trace = json::array();
  for (const IterationStep& s : r.trace.steps) {
    trace.push_back({{"step", s.step},
                     {"residual", optional_number(s.residual)},
                     {"stepGap", optional_number(s.step_gap)},
                     {"abscissa", optional_number(s.abscissa)},
                     {"errorToOracle", optional_number(s.error_to_oracle)},
                     {"supersolutionDefect",
                      optional_number(s.supersolution_defect)}});
  }
  root["trace"] = std::move(trace);
  return to_text(root);
}

ResultFile parse_result(std::string_view json_text) {
  const json root = parse_json(json_text);
  if (!root.is_object()) {
    throw Error(ErrorCode::kParseError, "result file must be a JSON object");
  }
  ResultFile r;
  r.name = root.value("name", "");
  r.mode = root.value("mode", "");
  r.version = root.value("solverVersion", "");
  const json& cfg = require_field(root, "config", "");
  r.config.rel_tol = read_number(require_field(cfg, "relTol", ""), "relTol");
  r.config.step_tol = read_number(require_field(cfg, "stepTol", ""), "stepTol");
  r.config.mon_tol = read_number(require_field(cfg, "monTol", ""), "monTol");
  r.config.max_iter = require_field(cfg, "maxIter", "").get<int>();
  const std::string method = require_field(cfg, "method", "").get<std::string>();
  r.config.method =
      method == "kron" ? LyapunovMethod::kKron : LyapunovMethod::kSchur;
  r.config.oracle = require_field(cfg, "oracle", "").get<bool>();
  r.config.seed = require_field(cfg, "seed", "").get<std::uint64_t>();

  const json& p = require_field(root, "P", "");
  const auto n = static_cast<Eigen::Index>(p.size());
  r.p = read_matrix(p, "P", n, n);
  if (auto it = root.find("K"); it != root.end() && !it->is_null()) {
    const auto rows = static_cast<Eigen::Index>(it->size());
    r.k = read_matrix(*it, "K", rows, n);
  }
  r.residual = number_or_nan(root, "residual");
  r.relative_residual = number_or_nan(root, "relativeResidual");
  r.iterations = root.value("iterations", 0);
  r.stop_reason = root.value("stopReason", std::string());
  if (const double k = number_or_nan(root, "kappa"); !std::isnan(k)) {
    r.kappa = k;
  }
  if (const double a = number_or_nan(root, "closedLoopAbscissa");
      !std::isnan(a)) {
    r.closed_loop_abscissa = a;
  }
  if (auto it = root.find("trace"); it != root.end() && it->is_array()) {
    for (const json& row : *it) {
      IterationStep s;
      s.step = row.value("step", 0);
      s.residual = number_or_nan(row, "residual");
      s.step_gap = number_or_nan(row, "stepGap");
      s.abscissa = number_or_nan(row, "abscissa");
      s.error_to_oracle = number_or_nan(row, "errorToOracle");
      s.supersolution_defect = number_or_nan(row, "supersolutionDefect");
      r.trace.steps.push_back(s);
    }
  }
  return r;
}

std::string write_trace_csv(const IterationTrace& trace) {
  std::string out = "step,residual,stepGap,abscissa,errorToOracle\n";
  for (const IterationStep& s : trace.steps) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.step,
                       s.residual, s.step_gap, s.abscissa, s.error_to_oracle);
  }
  return out;
}

StateSpaceSystem heat_demo(Eigen::Index n, double c, double nu,
                           const std::vector<Eigen::Index>& actuators,
                           const std::vector<Eigen::Index>& sensors) {
  if (n < 3) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("heat demo needs n >= 3, got {}", n));
  }
  if (!std::isfinite(c) || !std::isfinite(nu)) {
    throw Error(ErrorCode::kNonFinite, "heat demo parameters must be finite");
  }
  auto check = [n](Eigen::Index idx, const char* what) {
    if (idx < 0 || idx >= n) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("{} index {} out of range [0, {})", what, idx,
                              n));
    }
  };
  const double h = 1.0 / static_cast<double>(n + 1);
  const double scale = nu / (h * h);
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = -2.0 * scale + c;
    if (i > 0) a(i, i - 1) = scale;
    if (i + 1 < n) a(i, i + 1) = scale;
  }
  Matrix b = Matrix::Zero(n, static_cast<Eigen::Index>(actuators.size()));
  for (size_t k = 0; k < actuators.size(); ++k) {
    check(actuators[k], "actuator");
    b(actuators[k], static_cast<Eigen::Index>(k)) = 1.0;
  }
  Matrix cm = Matrix::Zero(static_cast<Eigen::Index>(sensors.size()), n);
  for (size_t k = 0; k < sensors.size(); ++k) {
    check(sensors[k], "sensor");
    cm(static_cast<Eigen::Index>(k), sensors[k]) = 1.0;
  }
  return StateSpaceSystem(std::move(a), std::move(b), std::move(cm));
}

double heat_shift_for_abscissa(Eigen::Index n, double nu, double target) {
  const double h = 1.0 / static_cast<double>(n + 1);
  const double top = nu / (h * h) * (-2.0 + 2.0 * std::cos(std::numbers::pi * h));
  return target - top;
}

std::vector<ProblemFile> bundled_corpus() {
  std::vector<ProblemFile> out;
  auto riccati = [&out](std::string name, Matrix a, Matrix b, Matrix c,
                        int expected) {
    ProblemFile f;
    f.name = std::move(name);
    f.mode = ProblemMode::kRiccati;
    f.n = a.rows();
    f.m = b.cols();
    f.p = c.rows();
    f.a = std::move(a);
    f.b = std::move(b);
    f.c = std::move(c);
    f.expected_exit = expected;
    out.push_back(std::move(f));
  };
  auto m1 = [](double v) { return Matrix::Constant(1, 1, v); };
  auto rows = [](std::initializer_list<std::initializer_list<double>> r) {
    Matrix m(static_cast<Eigen::Index>(r.size()),
             static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
      Eigen::Index j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  };

  riccati("scalar", m1(-1), m1(1), m1(1), 0);
  riccati("scalar-unstable", m1(1), m1(1), m1(1), 0);
  riccati("diagonal-stable", Vector::LinSpaced(3, -1, -3).asDiagonal(),
          Matrix::Identity(3, 3), Matrix::Identity(3, 3), 0);
  riccati("diagonal-unstable", rows({{1, 0, 0}, {0, -2, 0}, {0, 0, 3}}),
          rows({{1}, {0}, {1}}), rows({{1, 1, 1}}), 0);

  for (const Eigen::Index n : {8, 32, 64}) {
    for (const bool unstable : {false, true}) {
      const double c = unstable ? heat_shift_for_abscissa(n, 1.0, 5.0) : 0.0;
      const StateSpaceSystem sys = heat_demo(n, c, 1.0, {0}, {n - 1});
      riccati(fmt::format("heat-{}-{}", n, unstable ? "destabilized" : "stable"),
              sys.a(), sys.b(), sys.c(), 0);
    }
  }

  riccati("dichotomous", rows({{-1, 0}, {0, 2}}), rows({{0}, {1}}),
          rows({{1, 1}}), 0);
  out.back().k0 = rows({{0, 3}});

  auto sqrt_problem = [&out](std::string name, Matrix n_mat, Matrix q_mat,
                             double a, int expected) {
    ProblemFile f;
    f.name = std::move(name);
    f.mode = ProblemMode::kSqrt;
    f.n = n_mat.rows();
    f.n_mat = std::move(n_mat);
    f.q_mat = std::move(q_mat);
    f.reg_a = a;
    f.expected_exit = expected;
    out.push_back(std::move(f));
  };
  sqrt_problem("sqrt-scalar", m1(1), m1(1), 1.0, 0);
  sqrt_problem("sqrt-identity-3", Matrix::Identity(3, 3),
               Matrix::Identity(3, 3), 1.0, 0);
  sqrt_problem("sqrt-nonpositive-a", m1(1), m1(1), -1.0, 2);

  ProblemFile lyap;
  lyap.name = "lyapunov-companion";
  lyap.mode = ProblemMode::kLyapunov;
  lyap.n = 2;
  lyap.a = rows({{0, 1}, {-2, -3}});
  lyap.q_mat = Matrix::Identity(2, 2);
  lyap.expected_exit = 0;
  out.push_back(std::move(lyap));

  riccati("nonstabilizable", m1(1), m1(0), m1(1), 1);
  riccati("undetectable", rows({{1, 0}, {0, -1}}), Matrix::Identity(2, 2),
          rows({{0, 1}}), 1);
  return out;
}

}  // namespace kleinman
