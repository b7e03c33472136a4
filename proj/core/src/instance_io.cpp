#include "dhmpc/instance_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dhmpc {

namespace {

using nlohmann::json;

Matrix parse_matrix(const json& j, int rows, int cols, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows * cols)
    throw ModelError("instance: \"" + name + "\" must be a flat row-major array of " +
                     std::to_string(rows * cols) + " numbers");
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = j.at(r * cols + c).get<double>();
  return M;
}

Vector parse_vector(const json& j, int size, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != size)
    throw ModelError("instance: \"" + name + "\" must be an array of " + std::to_string(size) +
                     " numbers");
  Vector v(size);
  for (int i = 0; i < size; ++i) v[i] = j.at(i).get<double>();
  return v;
}

json dump_matrix(const Matrix& M) {
  json j = json::array();
  for (int r = 0; r < M.rows(); ++r)
    for (int c = 0; c < M.cols(); ++c) j.push_back(M(r, c));
  return j;
}

json dump_vector(const Vector& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

}  // namespace

MpcProblem parse_instance_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("instance: JSON parse error: ") + e.what());
  }
  if (!j.contains("dims")) throw ModelError("instance: missing \"dims\"");
  const json& jd = j.at("dims");
  const int nx = jd.at("nx").get<int>();
  const int nu = jd.at("nu").get<int>();
  const int nw = jd.at("nw").get<int>();
  const int N = jd.at("N").get<int>();
  if (N < 1) throw ModelError("instance: N must be >= 1");

  if (!j.contains("time_invariant")) throw ModelError("instance: missing \"time_invariant\"");
  const json& ti = j.at("time_invariant");

  StageSpec base;
  base.A = parse_matrix(ti.at("A"), nx, nx, "A");
  base.B = parse_matrix(ti.at("B"), nx, nu, "B");
  base.E = parse_matrix(ti.at("E"), nw, nx, "E");
  base.F = parse_matrix(ti.at("F"), nw, nu, "F");
  base.q = ti.contains("q") ? parse_vector(ti.at("q"), nx, "q") : Vector::Zero(nx);
  base.r = ti.contains("r") ? parse_vector(ti.at("r"), nu, "r") : Vector::Zero(nu);
  base.x_lo = parse_vector(ti.at("x_lo"), nx, "x_lo");
  base.x_hi = parse_vector(ti.at("x_hi"), nx, "x_hi");
  base.u_lo = parse_vector(ti.at("u_lo"), nu, "u_lo");
  base.u_hi = parse_vector(ti.at("u_hi"), nu, "u_hi");
  base.v = Vector::Zero(nx);
  base.w = Vector::Zero(nw);
  base.validate();

  auto series_of = [&](const char* key, int size) -> std::vector<Vector> {
    std::vector<Vector> out;
    if (!j.contains("series") || !j.at("series").contains(key)) return out;
    const json& arr = j.at("series").at(key);
    if (!arr.is_array() || static_cast<int>(arr.size()) != N)
      throw ModelError(std::string("instance: series \"") + key + "\" must have N entries");
    out.reserve(N);
    for (int i = 0; i < N; ++i)
      out.push_back(parse_vector(arr.at(i), size, std::string("series.") + key));
    return out;
  };

  const auto v_series = series_of("v", nx);
  const auto w_series = series_of("w", nw);
  const auto q_series = series_of("q", nx);
  const auto r_series = series_of("r", nu);

  std::vector<StageSpec> stages(N, base);
  for (int i = 0; i < N; ++i) {
    if (!v_series.empty()) stages[i].v = v_series[i];
    if (!w_series.empty()) stages[i].w = w_series[i];
    if (!q_series.empty()) stages[i].q = q_series[i];
    if (!r_series.empty()) stages[i].r = r_series[i];
  }
  return MpcProblem(std::move(stages));
}

MpcProblem load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("instance: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_instance_json(buf.str());
}

std::string instance_to_json(const MpcProblem& problem) {
  const Dims dims = problem.dims();
  const StageSpec& base = problem.stage(0);

  json j;
  j["dims"] = {{"nx", dims.nx}, {"nu", dims.nu}, {"nw", dims.nw}, {"N", dims.N}};
  j["time_invariant"] = {
      {"A", dump_matrix(base.A)},     {"B", dump_matrix(base.B)},
      {"E", dump_matrix(base.E)},     {"F", dump_matrix(base.F)},
      {"q", dump_vector(base.q)},     {"r", dump_vector(base.r)},
      {"x_lo", dump_vector(base.x_lo)}, {"x_hi", dump_vector(base.x_hi)},
      {"u_lo", dump_vector(base.u_lo)}, {"u_hi", dump_vector(base.u_hi)},
  };
  json v = json::array(), w = json::array(), q = json::array(), r = json::array();
  for (int i = 0; i < dims.N; ++i) {
    const StageSpec& s = problem.stage(i);
    v.push_back(dump_vector(s.v));
    w.push_back(dump_vector(s.w));
    q.push_back(dump_vector(s.q));
    r.push_back(dump_vector(s.r));
  }
  j["series"] = {{"v", v}, {"w", w}, {"q", q}, {"r", r}};
  return j.dump(2);
}

void save_instance(const MpcProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("instance: cannot write " + path);
  out << instance_to_json(problem) << "\n";
}

}  // namespace dhmpc
