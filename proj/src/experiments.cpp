#include "distgeom/experiments.hpp"

#include "distgeom/errors.hpp"
#include "experiments_internal.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace distgeom {

using nlohmann::json;

namespace detail {

Check make_check(std::string name, bool passed, json detail, bool gating) {
  return {std::move(name), passed, gating, std::move(detail)};
}

AssociationOptions association_options(const Config& cfg) {
  AssociationOptions o;
  o.abs_tol = cfg.number_or("association.abs_tol", o.abs_tol);
  o.rel_tol = cfg.number_or("association.rel_tol", o.rel_tol);
  if (cfg.has("association.richardson_order")) o.richardson_order = cfg.number("association.richardson_order");
  o.slope_tolerance = cfg.number_or("association.slope_tolerance", o.slope_tolerance);
  o.pairing.order = cfg.integer_or("pairing.order", o.pairing.order);
  o.pairing.min_cell_factor = cfg.number_or("pairing.min_cell_factor", o.pairing.min_cell_factor);
  o.pairing.grading = cfg.number_or("pairing.grading", o.pairing.grading);
  o.pairing.base_cells = cfg.integer_or("pairing.base_cells", o.pairing.base_cells);
  if (o.abs_tol < 0.0 || o.rel_tol < 0.0) throw ConfigError("config field 'association' tolerances must be >= 0");
  return o;
}

EmbeddingQuadrature embedding_quadrature(const Config& cfg) {
  EmbeddingQuadrature q;
  q.order = cfg.integer_or("quadrature.order", q.order);
  q.cells_per_radius = cfg.integer_or("quadrature.cells_per_radius", q.cells_per_radius);
  q.moment_degree = cfg.integer_or("quadrature.moment_degree", q.moment_degree);
  if (q.order < 1 || q.cells_per_radius < 1) throw ConfigError("config field 'quadrature' must be positive");
  return q;
}

namespace {

double kink_amp(double x2) { return 1.0 + 0.5 * std::sin(x2); }

}  // namespace

RoughTensorField corpus_rough(const std::string& name, const Chart& chart) {
  if (chart.dim() != 2) throw ConfigError("corpus field '" + name + "' is two-dimensional");
  if (name == "kink_vector")
    return RoughTensorField::loc_integrable(
        chart, Valence{1, 0},
        [](const Point& y, std::span<double> o) {
          o[0] = std::abs(y(0)) * kink_amp(y(1));
          o[1] = 0.3 * y(0) * y(1);
        },
        {Plane{0, 0.0}}, name);
  if (name == "kink_vector_dx")
    return RoughTensorField::loc_integrable(
        chart, Valence{1, 0},
        [](const Point& y, std::span<double> o) {
          o[0] = (y(0) > 0.0 ? 1.0 : (y(0) < 0.0 ? -1.0 : 0.0)) * kink_amp(y(1));
          o[1] = 0.3 * y(1);
        },
        {Plane{0, 0.0}}, name);
  if (name == "delta_sum") {
    RoughTensorField r(chart, Valence{1, 0}, name);
    r.add_delta(make_point({0.1, -0.05}), Tensor::vector(make_point({1.0, 0.5})));
    r.add_delta(make_point({-0.15, 0.1}), Tensor::vector(make_point({-0.3, 0.8})));
    return r;
  }
  if (name == "delta_scalar") return RoughTensorField::delta(chart, make_point({0.05, -0.03}), Tensor::scalar(1.0), name);
  if (name == "delta_origin") return RoughTensorField::delta(chart, make_point({0.0, 0.0}), Tensor::scalar(1.0), name);
  if (name == "cone_m") {
    Chart c(chart.domain(), {make_point({0.0, 0.0})});
    return RoughTensorField::loc_integrable(c, Valence{0, 2}, cone_m, {}, name);
  }
  if (name == "sin_sum" || name == "frame_tensor") return RoughTensorField::from_smooth(corpus_smooth(name, chart), name);
  throw ConfigError("unknown corpus field '" + name + "'");
}

TensorField corpus_smooth(const std::string& name, const Chart& chart) {
  if (name == "sin_sum")
    return TensorField(chart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = std::sin(y(0) + y(1)); });
  if (name == "frame_tensor")
    return TensorField(chart, Valence{1, 1}, [](const Point& y, std::span<double> o) {
      o[0] = std::cos(y(1));
      o[1] = y(0);
      o[2] = y(1) * y(1);
      o[3] = 1.0 + std::sin(y(0));
    });
  throw ConfigError("unknown smooth corpus field '" + name + "'");
}

VectorField corpus_vector(const std::string& name, int dim) {
  if (name == "unit_x") {
    Point e = Point::Zero(dim);
    e(0) = 1.0;
    return VectorField(dim, [e](const Point&) { return e; }, [dim](const Point&) { return Mat(Mat::Zero(dim, dim)); },
                       "unit_x");
  }
  if (name == "rotation") {
    Mat m = Mat::Zero(dim, dim);
    m(0, 1) = -1.0;
    m(1, 0) = 1.0;
    return VectorField::affine(m, Point::Zero(dim), "rotation");
  }
  if (name == "shear_flow") {
    if (dim != 2) throw ConfigError("vector field 'shear_flow' is two-dimensional");
    return VectorField(
        2, [](const Point& x) { return make_point({1.0 + 0.3 * x(1) * x(1), 0.2 * std::sin(x(0))}); },
        [](const Point& x) {
          Mat j(2, 2);
          j << 0.0, 0.6 * x(1), 0.2 * std::cos(x(0)), 0.0;
          return j;
        },
        "shear_flow");
  }
  throw ConfigError("unknown vector field '" + name + "'");
}

TestDensity density_lie_derivative(const TestDensity& psi, const VectorField& x) {
  const int n = psi.dim();
  const Box sup = psi.support();
  const double margin = 0.1 * sup.max_side();
  const Point lo = sup.lower.array() - margin, hi = sup.upper.array() + margin;
  Box big(lo, hi);
  const Chart chart(big);
  const TensorField f(chart, psi.valence(), [psi](const Point& y, std::span<double> o) { psi.evaluate(y, o); });
  const TensorField lf = lie_derivative(f, x);
  const std::size_t m = f.components();
  return TestDensity(
      n, psi.valence(), sup,
      [lf, x, m, sup, psi](const Point& y, std::span<double> o) {
        if (!sup.contains(y)) {
          for (double& v : o) v = 0.0;
          return;
        }
        lf.evaluate(y, o);
        std::vector<double> p(m);
        psi.evaluate(y, p);
        const double div = x.divergence(y);
        for (std::size_t k = 0; k < m; ++k) o[k] += div * p[k];
      },
      "Lie(" + x.label() + ", " + psi.label() + ")");
}

Box centered_box(int n, double r) { return Box::around(Point::Zero(n), r); }

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

RunRecord start_record(const Config& cfg, const std::string& experiment, const EpsNet& net) {
  RunRecord r;
  r.experiment = experiment;
  r.name = cfg.string_or("name", experiment);
  r.config_hash = cfg.hash;
  r.config = cfg.data;
  r.results["net"] = net.to_json();
  return r;
}

}  // namespace detail

using namespace detail;

EpsNet NetOverride::apply(EpsNet net) const {
  if (eps0) net.eps0 = *eps0;
  if (ratio) net.ratio = *ratio;
  if (levels) net.levels = *levels;
  return net;
}

bool RunRecord::passed() const {
  for (const Check& c : checks)
    if (c.gating && !c.passed) return false;
  return true;
}

const Check* RunRecord::check(const std::string& name) const {
  for (const Check& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

json checks_json(const std::vector<Check>& checks) {
  json a = json::array();
  for (const Check& c : checks) a.push_back({{"name", c.name}, {"passed", c.passed}, {"gating", c.gating}, {"detail", c.detail}});
  return a;
}

}  // namespace

json RunRecord::to_json() const {
  return {{"schema", kReportSchemaVersion}, {"experiment", experiment}, {"name", name},
          {"config_hash", config_hash},     {"config", config},         {"results", results},
          {"checks", checks_json(checks)},  {"passed", passed()}};
}

double cone_weight(double a) { return 4.0 * M_PI * (1.0 - a); }

void cone_m(const Point& y, std::span<double> out) {
  const double r2 = y(0) * y(0) + y(1) * y(1);
  const double c = (y(0) * y(0) - y(1) * y(1)) / r2;
  const double s = 2.0 * y(0) * y(1) / r2;
  out[0] = c;
  out[1] = s;
  out[2] = s;
  out[3] = -c;
}

GeneralizedMetric cone_metric(const Chart& chart, double a, EmbeddingQuadrature quad) {
  if (!(a > 0.0 && a <= 1.0)) throw ConfigError("config field 'cone.A' must lie in (0, 1]");
  const GeneralizedField delta = sigma(TensorField::constant(chart, Tensor::from_matrix(Mat::Identity(2, 2), {0, 2})), "delta");
  const double flat = 0.5 * (1.0 + a * a);
  const double aniso = 0.5 * (1.0 - a * a);
  if (aniso == 0.0) return GeneralizedMetric(delta.relabeled("g_cone"));
  Chart c(chart.domain(), {make_point({0.0, 0.0})});
  const RoughTensorField m = RoughTensorField::loc_integrable(c, Valence{0, 2}, cone_m, {}, "m");
  return GeneralizedMetric((delta.scaled(flat) + iota(m, quad).scaled(aniso)).relabeled("g_cone"));
}

SmoothingChoice make_choice(const Chart& chart, int q, const std::string& transport, double shear) {
  if (q < 0 || q > 8) throw ConfigError("config field 'choices.kernel_q' must lie in [0, 8]");
  const SmoothingKernelFamily k = SmoothingKernelFamily::product(chart.dim(), MollifierProfile::make(q));
  if (transport == "identity") return {TransportOperator::identity(chart), k, "q" + std::to_string(q) + "/identity"};
  if (transport == "flat_frame")
    return {TransportOperator::flat_frame(chart, FlatteningMap::quadratic_shear(chart.dim(), shear)), k,
            "q" + std::to_string(q) + "/flat_frame"};
  throw ConfigError("config field 'choices.transport' must be \"identity\" or \"flat_frame\"");
}

std::vector<SmoothingChoice> choices_from_config(const Config& cfg, const Chart& chart) {
  std::vector<SmoothingChoice> out;
  for (const json& t : cfg.tables("choices"))
    out.push_back(make_choice(chart, field_integer_or(t, "kernel_q", 0), field_string_or(t, "transport", "identity"),
                              field_number_or(t, "shear", 0.1)));
  if (out.empty()) out.push_back(make_choice(chart, 0, "identity"));
  return out;
}

std::vector<TestDensity> densities_from_config(const Config& cfg, int dim, Valence valence) {
  std::vector<TestDensity> out;
  int idx = 0;
  for (const json& t : cfg.tables("psi")) {
    const std::string ctx = "psi[" + std::to_string(idx++) + "]";
    const std::string kind = field_string(t, "kind", ctx);
    const std::vector<double> c = field_numbers_or(t, "center", std::vector<double>(dim, 0.0));
    if (static_cast<int>(c.size()) != dim) throw ConfigError("config field '" + ctx + ".center' must have " + std::to_string(dim) + " entries");
    Point center(dim);
    for (int i = 0; i < dim; ++i) center(i) = c[i];
    const double value = field_number_or(t, "value", 1.0);
    TestDensity d = [&] {
      if (kind == "bump") return TestDensity::bump(center, field_number(t, "radius", ctx), value);
      if (kind == "plateau")
        return TestDensity::plateau(center, field_number(t, "inner", ctx), field_number(t, "outer", ctx), value);
      throw ConfigError("config field '" + ctx + ".kind' must be \"bump\" or \"plateau\"");
    }();
    if (valence.rank() > 0) {
      const std::vector<double> comps = field_numbers(t, "components", ctx);
      if (comps.size() != component_count(dim, valence))
        throw ConfigError("config field '" + ctx + ".components' must have " +
                          std::to_string(component_count(dim, valence)) + " entries");
      d = TestDensity::tensor_valued(d, Tensor(dim, valence, comps));
    }
    out.push_back(d);
  }
  if (out.empty()) throw ConfigError("missing required config field 'psi'");
  return out;
}

EpsNet net_from_config(const Config& cfg, const NetOverride& ov, const std::string& table) {
  EpsNet net;
  net.eps0 = cfg.number(table + ".eps0");
  net.ratio = cfg.number(table + ".ratio");
  net.levels = cfg.integer(table + ".levels");
  net = ov.apply(net);
  try {
    net.validate();
  } catch (const Error& e) {
    throw ConfigError("config table '" + table + "': " + e.what());
  }
  return net;
}

RunRecord run_experiment(const Config& cfg, const NetOverride& ov) {
  const std::string e = cfg.string("experiment");
  if (e == "cone") return run_cone(cfg, ov);
  if (e == "compat") return run_compatibility(cfg, ov);
  if (e == "commute") return run_commutation(cfg, ov);
  if (e == "associate") return run_association(cfg, ov);
  if (e == "embed") return run_embedding(cfg, ov);
  if (e == "exponents") return run_exponents(cfg, ov);
  if (e == "curvature") return run_curvature(cfg, ov);
  throw ConfigError("config field 'experiment' has unknown value '" + e + "'");
}

bool SuiteRecord::passed() const {
  for (const RunRecord& r : runs)
    if (!r.passed()) return false;
  for (const Check& c : checks)
    if (c.gating && !c.passed) return false;
  return true;
}

json SuiteRecord::to_json() const {
  json runs_j = json::array();
  for (const RunRecord& r : runs)
    runs_j.push_back({{"name", r.name}, {"experiment", r.experiment}, {"config_hash", r.config_hash}, {"passed", r.passed()}});
  return {{"schema", kReportSchemaVersion}, {"name", name},   {"config_hash", config_hash},
          {"runs", runs_j},                 {"checks", checks_json(checks)}, {"passed", passed()}};
}

SuiteRecord run_suite(const Config& cfg, const NetOverride& ov, const RunObserver& observer) {
  SuiteRecord s;
  s.name = cfg.string_or("name", "suite");
  const json& list = cfg.at("runs");
  if (!list.is_array() || list.empty()) throw ConfigError("config field 'runs' must be a non-empty array of paths");
  const std::filesystem::path base = cfg.source.has_parent_path() ? cfg.source.parent_path() : std::filesystem::path(".");
  std::string hashes = cfg.hash;
  std::vector<Config> cfgs;
  for (const json& p : list) {
    if (!p.is_string()) throw ConfigError("config field 'runs' must be a non-empty array of paths");
    cfgs.push_back(load_config(base / p.get<std::string>()));
    hashes += cfgs.back().hash;
  }
  if (!ov.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "override";
    if (ov.eps0) os << " eps0=" << *ov.eps0;
    if (ov.ratio) os << " ratio=" << *ov.ratio;
    if (ov.levels) os << " levels=" << *ov.levels;
    hashes += os.str();
  }
  s.config_hash = sha256_hex(hashes);
  for (const Config& c : cfgs) {
    const auto t0 = std::chrono::steady_clock::now();
    s.runs.push_back(run_experiment(c, ov));
    if (observer)
      observer(s.runs.back(), std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }

  // Cone limits against 1 - A: least-squares line through the origin.
  std::vector<double> xs, ys;
  for (const RunRecord& r : s.runs) {
    if (r.experiment != "cone" || !r.results.contains("linearity_point")) continue;
    const json& lp = r.results["linearity_point"];
    if (lp["one_minus_a"].get<double>() == 0.0) continue;
    xs.push_back(lp["one_minus_a"].get<double>());
    ys.push_back(lp["normalized_limit"].get<double>());
  }
  const double min_r2 = cfg.number_or("checks.cone_linearity_r2", 0.999);
  if (xs.size() >= 2) {
    double sxy = 0.0, sxx = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += xs[i] * ys[i];
      sxx += xs[i] * xs[i];
      mean += ys[i];
    }
    mean /= static_cast<double>(ys.size());
    const double k = sxy / sxx;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ss_res += (ys[i] - k * xs[i]) * (ys[i] - k * xs[i]);
      ss_tot += (ys[i] - mean) * (ys[i] - mean);
    }
    const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    s.checks.push_back(make_check("cone_linearity", r2 >= min_r2,
                                  {{"one_minus_a", xs}, {"limit_over_psi0", ys}, {"slope", k}, {"slope_target", 4.0 * M_PI},
                                   {"r2", r2}, {"min_r2", min_r2}}));
  }
  return s;
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

}  // namespace

std::vector<std::filesystem::path> write_record(const RunRecord& r, const std::filesystem::path& dir,
                                                const std::string& format) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  if (format == "json") {
    out.push_back(dir / (r.name + ".json"));
    write_text(out.back(), r.to_json().dump(2) + "\n");
  } else if (format == "csv") {
    for (const auto& [name, text] : r.tables) {
      out.push_back(dir / (r.name + "_" + name + ".csv"));
      write_text(out.back(), text);
    }
    std::string checks = "name,passed,gating\n";
    for (const Check& c : r.checks) checks += c.name + "," + (c.passed ? "1" : "0") + "," + (c.gating ? "1" : "0") + "\n";
    out.push_back(dir / (r.name + "_checks.csv"));
    write_text(out.back(), checks);
  } else {
    throw ConfigError("output format must be json or csv");
  }
  return out;
}

std::vector<std::filesystem::path> write_suite(const SuiteRecord& s, const std::filesystem::path& dir,
                                               const std::string& format) {
  std::vector<std::filesystem::path> out;
  for (const RunRecord& r : s.runs) {
    const auto p = write_record(r, dir, format);
    out.insert(out.end(), p.begin(), p.end());
  }
  std::filesystem::create_directories(dir);
  if (format == "json") {
    out.push_back(dir / (s.name + ".json"));
    write_text(out.back(), s.to_json().dump(2) + "\n");
  } else {
    std::string t = "name,passed,gating\n";
    for (const Check& c : s.checks) t += c.name + "," + (c.passed ? "1" : "0") + "," + (c.gating ? "1" : "0") + "\n";
    out.push_back(dir / (s.name + "_checks.csv"));
    write_text(out.back(), t);
  }
  return out;
}

}  // namespace distgeom
