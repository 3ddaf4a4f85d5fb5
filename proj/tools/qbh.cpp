// qbh: command-line front end for the quadratic bosonic Hamiltonian toolkit.

#include <CLI11.hpp>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>
#include <variant>

#include <qbh/qbh.hpp>

using namespace qbh;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "qbh 0.1.0";

const std::vector<std::string> kParamNames{"Omega", "J", "gamma", "Delta", "s", "Omega1", "Omega2", "K1", "K2"};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

using Cell = std::variant<std::string, double, long long, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

std::string cell_text(const Cell& c) {
  if (auto s = std::get_if<std::string>(&c)) return *s;
  if (auto d = std::get_if<double>(&c)) return fmt(*d);
  if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<bool>(c) ? "true" : "false";
}

json cell_json(const Cell& c) {
  if (auto s = std::get_if<std::string>(&c)) return *s;
  if (auto d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(fmt(*d));
  if (auto i = std::get_if<long long>(&c)) return *i;
  return std::get<bool>(c);
}

void write_table(std::ostream& os, const Table& t, const std::string& format) {
  if (format == "json") {
    json arr = json::array();
    for (const auto& r : t.rows) {
      json o = json::object();
      for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = cell_json(r[i]);
      arr.push_back(o);
    }
    os << arr.dump(2) << "\n";
    return;
  }
  if (format == "text") {
    for (const auto& r : t.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << t.columns[i] << ": " << cell_text(r[i]) << "\n";
      if (t.rows.size() > 1) os << "\n";
    }
    return;
  }
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell_text(r[i]);
    os << "\n";
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Common {
  std::string model = "harmonic";
  std::map<std::string, double> params;
  int grid = 0;
  std::string out;
  std::string format;
  double quad_tol = 1e-10;
  std::vector<std::string> argv;

  Common() {
    for (const auto& n : kParamNames) params[n] = std::numeric_limits<double>::quiet_NaN();
  }
};

void add_common(CLI::App* sub, Common& c, const std::string& default_format) {
  sub->add_option("--model", c.model, "built-in model (harmonic, imaghop, interpolation, double) or JSON model file");
  for (const auto& n : kParamNames) sub->add_option("--" + n, c.params[n], "model parameter " + n);
  sub->add_option("--grid", c.grid, "Brillouin-zone points per axis (odd)");
  sub->add_option("--out", c.out, "output file (a .manifest.json is written next to it)");
  sub->add_option("--format", c.format, "csv, json or text")->default_str(default_format);
  sub->add_option("--quad-tol", c.quad_tol, "absolute quadrature tolerance");
}

struct Resolved {
  QBHSpec spec{1, 1, 1};
  std::optional<ModelParams> params;
  json description;
};

Resolved resolve(const Common& c) {
  Resolved r;
  const bool builtin = c.model == "harmonic" || c.model == "imaghop" || c.model == "interpolation" || c.model == "double";
  if (!builtin) {
    if (!std::filesystem::exists(c.model)) default_params(c.model);  // raises the unknown-model error
    for (const auto& [n, v] : c.params) {
      if (!std::isnan(v)) throw ConfigError("parameter --" + n + " cannot be combined with a model file");
    }
    r.spec = load_spec_file(c.model);
    r.description = {{"file", c.model}, {"spec", spec_to_json(r.spec)}};
    return r;
  }
  ModelParams p = default_params(c.model);
  for (const auto& [n, v] : c.params) {
    if (!std::isnan(v)) set_param(p, n, v);
  }
  r.spec = build_model(p);
  r.params = p;
  r.description = params_to_json(p);
  return r;
}

BZGrid make_grid(const Common& c, int D) { return c.grid > 0 ? BZGrid(D, c.grid) : BZGrid::default_for(D); }

QuadratureSettings quad_settings(const Common& c) {
  QuadratureSettings qs;
  qs.tol = c.quad_tol;
  return qs;
}

json manifest_base(const Common& c, const std::string& command, const Resolved* r) {
  json m;
  m["tool"] = kVersion;
  m["command"] = command;
  m["argv"] = c.argv;
  if (r) m["model"] = r->description;
  m["grid"] = c.grid > 0 ? c.grid : (r ? BZGrid::default_for(r->spec.D()).n(0) : 0);
  const Tolerances t;
  m["tolerances"] = {{"imag", t.imag}, {"coll", t.coll}, {"kc", t.kc}, {"kpr", t.kpr}, {"defect_floor", defect_floor}};
  const QuadratureSettings qs = quad_settings(c);
  m["quadrature"] = {{"tol", qs.tol},
                     {"n_init", qs.n_init},
                     {"n_max_1d", qs.n_max_1d},
                     {"n_max_axis", qs.n_max_axis},
                     {"near_critical_gap", qs.near_critical_gap},
                     {"gk_max_panels", qs.gk_max_panels}};
  return m;
}

void emit(const Common& c, const Table& t, const std::string& format, json manifest) {
  if (c.out.empty()) {
    write_table(std::cout, t, format);
    return;
  }
  {
    std::ofstream f(c.out);
    if (!f) throw ConfigError("cannot write '" + c.out + "'");
    write_table(f, t, format);
  }
  manifest["output"] = c.out;
  manifest["format"] = format;
  manifest["rows"] = t.rows.size();
  std::ofstream(c.out + ".manifest.json") << manifest.dump(2) << "\n";
}

std::vector<Cell> k_cells(const KVec& k) {
  std::vector<Cell> out;
  for (double v : k) out.push_back(v);
  return out;
}

std::string k_text(const KVec& k) {
  std::string s;
  for (std::size_t i = 0; i < k.size(); ++i) s += (i ? " " : "") + fmt(k[i]);
  return s;
}

// ---- stability / gap / bands -------------------------------------------------------------

int cmd_stability(const Common& c) {
  const Resolved r = resolve(c);
  const StabilityReport rep = stability_report(r.spec, make_grid(c, r.spec.D()));
  std::string sing;
  for (const auto& [k, cls] : rep.singular_momenta) sing += (sing.empty() ? "" : ";") + std::string(to_string(cls)) + "@" + k_text(k);
  double energy = std::numeric_limits<double>::quiet_NaN();
  if (rep.singular_momenta.empty()) {
    try {
      energy = qpv_energy_density(r.spec, quad_settings(c));
    } catch (const Error&) {
    }
  }
  Table t{{"dynamically_stable", "boundary", "thermodynamic", "krein_gap_direct", "krein_gap_indirect", "gap_argmin_k",
           "singular_momenta", "qpv_energy_density"},
          {}};
  t.add({rep.dynamically_stable, rep.boundary, std::string(to_string(rep.thermo)), rep.krein_gap_direct,
         rep.krein_gap_indirect, k_text(rep.gap_argmin_k), sing, energy});
  emit(c, t, c.format.empty() ? "text" : c.format, manifest_base(c, "stability", &r));
  return 0;
}

int cmd_gap(const Common& c) {
  const Resolved r = resolve(c);
  const GapResult g = krein_gap(r.spec, make_grid(c, r.spec.D()));
  Table t{{"direct", "indirect", "argmin_k", "closed_on_grid"}, {}};
  t.add({g.direct, g.indirect, k_text(g.argmin_k), g.closed_on_grid});
  emit(c, t, c.format.empty() ? "text" : c.format, manifest_base(c, "gap", &r));
  return 0;
}

int cmd_bands(const Common& c) {
  const Resolved r = resolve(c);
  const GridSpectrum gs = sample_grid(r.spec, make_grid(c, r.spec.D()));
  Table t;
  for (int a = 0; a < r.spec.D(); ++a) t.columns.push_back("k" + std::to_string(a));
  for (const char* col : {"index", "omega_re", "omega_im", "signature", "class", "kpr"}) t.columns.push_back(col);
  for (const auto& sp : gs.points) {
    for (Eigen::Index n = 0; n < sp.eigenvalues.size(); ++n) {
      auto row = k_cells(sp.k);
      const double kp = n < sp.d ? kpr(sp)(n) : (n < 2 * sp.d ? kpr(sp)(n - sp.d) : 0.0);
      row.insert(row.end(), {static_cast<long long>(n), sp.eigenvalues(n).real(), sp.eigenvalues(n).imag(),
                             static_cast<long long>(sp.signatures[n]), std::string(to_string(sp.classification)), kp});
      t.add(std::move(row));
    }
  }
  emit(c, t, c.format.empty() ? "csv" : c.format, manifest_base(c, "bands", &r));
  return 0;
}

// ---- correlations --------------------------------------------------------------------------

struct CorrOpts {
  int rmax = 20;
  std::string blocks = "xx,pp,xp,px";
  std::string stencil;
  bool allow_gapless = false;
  std::string fit;
  int fit_min = 5, fit_max = 40;
  std::string fit_model = "exp-power";
};

int cmd_correlations(const Common& c, const CorrOpts& o) {
  const Resolved r = resolve(c);
  QuadratureSettings qs = quad_settings(c);
  json man = manifest_base(c, "correlations", &r);
  man["rmax"] = o.rmax;
  Table t;
  const int D = r.spec.D(), d = r.spec.d();
  for (int a = 0; a < D; ++a) t.columns.push_back(D == 1 ? "r" : "r" + std::to_string(a));
  if (!o.stencil.empty()) {
    // analytic combinations are integrated straight through gap closings
    qs.allow_gapless = true;
    const Stencil st = parse_stencil(o.stencil);
    // separations along the first axis
    std::vector<Offset> rs;
    for (int x = 0; x <= o.rmax; ++x) {
      rs.push_back(Offset(D, 0));
      rs.back()[0] = x;
    }
    const auto res = stencil_correlator(r.spec, st, rs, qs);
    for (const char* col : {"block", "value", "quad_error"}) t.columns.push_back(col);
    for (std::size_t i = 0; i < rs.size(); ++i) {
      std::vector<Cell> row;
      for (int v : rs[i]) row.push_back(static_cast<long long>(v));
      row.insert(row.end(), {std::string("stencil"), res.values[i], res.errors[i]});
      t.add(std::move(row));
    }
    man["stencil"] = o.stencil;
    man["method"] = res.method;
    emit(c, t, c.format.empty() ? "csv" : c.format, man);
    return 0;
  }
  qs.allow_gapless = o.allow_gapless;
  const RealSpaceCM cm = real_space_cm(r.spec, o.rmax, qs);
  man["method"] = cm.method;
  man["krein_gap"] = cm.krein_gap;
  auto parse_block = [](const std::string& b) {
    if (b == "xx") return Block::xx;
    if (b == "pp") return Block::pp;
    if (b == "xp") return Block::xp;
    if (b == "px") return Block::px;
    throw ConfigError("unknown block '" + b + "' (expected xx, pp, xp, px)");
  };
  if (!o.fit.empty()) {
    t.columns = {"block", "xi", "amplitude", "power", "fit_r_min", "fit_r_max", "residual", "points"};
    for (const auto& b : split(o.fit, ',')) {
      FitOptions fo;
      fo.r_min = o.fit_min;
      fo.r_max = std::min(o.fit_max, o.rmax);
      if (o.fit_model != "exp" && o.fit_model != "exp-power") throw ConfigError("--fit-model must be exp or exp-power");
      fo.power_law = o.fit_model == "exp-power";
      const CorrelationFit f = correlation_length(cm, parse_block(b), fo);
      t.add({b, f.xi, f.amplitude, f.power, static_cast<long long>(f.fit_window.first),
             static_cast<long long>(f.fit_window.second), f.residual, static_cast<long long>(f.points)});
    }
    emit(c, t, c.format.empty() ? "csv" : c.format, man);
    return 0;
  }
  for (const char* col : {"block", "band_a", "band_b", "value", "quad_error"}) t.columns.push_back(col);
  const auto blocks = split(o.blocks, ',');
  for (const auto& b : blocks) parse_block(b);
  for (std::size_t s = 0; s < cm.separations.size(); ++s) {
    for (const auto& b : blocks) {
      const Block bl = parse_block(b);
      const int ra = (bl == Block::pp || bl == Block::px) ? d : 0, cb = (bl == Block::pp || bl == Block::xp) ? d : 0;
      for (int x = 0; x < d; ++x) {
        for (int y = 0; y < d; ++y) {
          std::vector<Cell> row;
          for (int v : cm.separations[s]) row.push_back(static_cast<long long>(v));
          row.insert(row.end(), {b, static_cast<long long>(x), static_cast<long long>(y), cm.blocks[s](ra + x, cb + y),
                                 cm.errors[s](ra + x, cb + y)});
          t.add(std::move(row));
        }
      }
    }
  }
  emit(c, t, c.format.empty() ? "csv" : c.format, man);
  return 0;
}

// ---- entanglement ------------------------------------------------------------------------

struct EEOpts {
  std::string sizes = "64";
  int B = 0;
  int start = 0;
};

std::vector<Cell> param_cells(const Resolved& r) {
  std::vector<Cell> out;
  if (r.params)
    for (const auto& n : param_names(*r.params)) out.push_back(get_param(*r.params, n));
  return out;
}

std::vector<std::string> param_columns(const Resolved& r) {
  return r.params ? param_names(*r.params) : std::vector<std::string>{};
}

int cmd_entanglement(const Common& c, const EEOpts& o) {
  const Resolved r = resolve(c);
  const double gap = krein_gap(r.spec, make_grid(c, r.spec.D())).direct;
  Table t;
  t.columns = {"N", "B_size"};
  for (const auto& n : param_columns(r)) t.columns.push_back(n);
  for (const char* col : {"krein_gap", "S_B", "E_N"}) t.columns.push_back(col);
  for (const auto& ns : split(o.sizes, ',')) {
    const int N = std::stoi(ns);
    const int B = o.B > 0 ? o.B : N / 2;
    if (o.B <= 0 && N % 2 != 0) std::cerr << "warning: odd N=" << N << " bisected as " << B << " sites\n";
    const FiniteCM cm = finite_cm(r.spec, N);
    const EntanglementResult e = entanglement(cm, {o.start, B});
    std::vector<Cell> row{static_cast<long long>(N), static_cast<long long>(B)};
    for (auto& p : param_cells(r)) row.push_back(p);
    row.insert(row.end(), {gap, e.entropy, e.log_negativity});
    t.add(std::move(row));
  }
  emit(c, t, c.format.empty() ? "csv" : c.format, manifest_base(c, "entanglement", &r));
  return 0;
}

// ---- qmt -----------------------------------------------------------------------------------

struct QmtOpts {
  std::string k = "0";
  std::string vary;
  int band = 0;
  double h = 1e-5;
};

int cmd_qmt(const Common& c, const QmtOpts& o) {
  const Resolved r = resolve(c);
  if (!r.params) throw ConfigError("qmt needs a built-in model (parameters are differentiated by name)");
  const auto names = o.vary.empty() ? param_names(*r.params) : split(o.vary, ',');
  const ModelFamily fam = family_from_params(*r.params, names);
  std::vector<double> at;
  for (const auto& n : names) at.push_back(get_param(*r.params, n));
  KVec k;
  for (const auto& s : split(o.k, ',')) k.push_back(std::stod(s));
  const QMTResult q = qmt(fam, at, k, o.band, o.h);
  Table t{{"mu", "nu", "g", "chi_re", "chi_im"}, {}};
  for (std::size_t m = 0; m < names.size(); ++m)
    for (std::size_t n = 0; n < names.size(); ++n)
      t.add({names[m], names[n], q.g(m, n), q.chi(m, n).real(), q.chi(m, n).imag()});
  json man = manifest_base(c, "qmt", &r);
  man["k"] = k;
  man["h_fd"] = o.h;
  emit(c, t, c.format.empty() ? "csv" : c.format, man);
  return 0;
}

// ---- sweep ---------------------------------------------------------------------------------

struct SweepOpts {
  std::string param;
  double from = 0, to = 1;
  int steps = 11;
  std::string param2;
  double from2 = 0, to2 = 1;
  int steps2 = 1;
  std::string emit_list = "gap";
  int N = 64;
  int threads = 0;
  bool resume = false;
};

int default_threads() {
  if (const char* e = std::getenv("QBH_THREADS")) {
    const int v = std::atoi(e);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct SweepRow {
  std::string quantity, value, status;
};

std::vector<SweepRow> sweep_point(ModelParams p, const std::vector<std::string>& emit_list, int N, const QuadratureSettings& qs) {
  std::vector<SweepRow> rows;
  std::optional<QBHSpec> spec;
  std::string build_error;
  try {
    spec = build_model(p);
  } catch (const Error& e) {
    build_error = e.what();
  }
  std::optional<StabilityReport> rep;
  std::optional<FiniteCM> cm;
  for (const auto& q : emit_list) {
    SweepRow row{q, "nan", "ok"};
    try {
      if (!spec) throw ConfigError(build_error);
      auto report = [&]() -> const StabilityReport& {
        if (!rep) rep = stability_report(*spec);
        return *rep;
      };
      auto finite = [&]() -> const FiniteCM& {
        if (!cm) cm = finite_cm(*spec, N);
        return *cm;
      };
      if (q == "gap") {
        row.value = fmt(report().krein_gap_direct);
      } else if (q == "gap_indirect") {
        row.value = fmt(report().krein_gap_indirect);
      } else if (q == "stable") {
        row.value = report().dynamically_stable ? "1" : "0";
      } else if (q == "thermo") {
        row.value = to_string(report().thermo);
      } else if (q == "energy") {
        row.value = fmt(qpv_energy_density(*spec, qs));
      } else if (q == "ee") {
        row.value = fmt(entanglement_entropy(finite(), bisection(N)));
      } else if (q == "en") {
        row.value = fmt(log_negativity(finite(), bisection(N)));
      } else if (q == "xi") {
        row.value = fmt(estimate_xi(*spec, qs).xi);
      } else if (q == "qmt") {
        const auto names = param_names(p);
        std::vector<double> at;
        for (const auto& n : names) at.push_back(get_param(p, n));
        const auto s = qmt_divergence_scan(family_from_params(p, names), {at}, {0.0});
        row.value = fmt(s[0].magnitude);
        if (s[0].divergent) row.status = "divergent";
      } else {
        throw ConfigError("unknown sweep quantity '" + q + "'");
      }
    } catch (const ConfigError& e) {
      if (q != "gap" && q != "gap_indirect" && q != "stable" && q != "thermo" && q != "energy" && q != "ee" &&
          q != "en" && q != "xi" && q != "qmt")
        throw;
      row.status = std::string("config_error: ") + e.what();
    } catch (const Error& e) {
      row.status = std::string("error: ") + e.what();
    }
    for (char& ch : row.status)
      if (ch == ',' || ch == '\n') ch = ';';
    rows.push_back(row);
  }
  return rows;
}

int cmd_sweep(const Common& c, SweepOpts o) {
  if (c.model != "harmonic" && c.model != "imaghop" && c.model != "interpolation" && c.model != "double")
    throw ConfigError("sweep needs a built-in model");
  const Resolved r = resolve(c);
  ModelParams base = *r.params;
  get_param(base, o.param);
  if (!o.param2.empty()) get_param(base, o.param2);
  if (o.steps < 1 || (!o.param2.empty() && o.steps2 < 1)) throw ConfigError("sweep ranges must be non-empty");
  if (o.resume && c.out.empty()) throw ConfigError("--resume requires --out");
  if (!c.format.empty() && c.format != "csv") throw ConfigError("sweep writes CSV only");
  const auto emit_list = split(o.emit_list, ',');
  if (emit_list.empty()) throw ConfigError("--emit is empty");
  const int n2 = o.param2.empty() ? 1 : o.steps2;
  const int total = o.steps * n2;
  auto value_at = [](double a, double b, int n, int i) { return n == 1 ? a : a + (b - a) * i / (n - 1); };

  std::vector<std::string> header{"i"};
  if (!o.param2.empty()) header.push_back("j");
  header.push_back(o.param);
  if (!o.param2.empty()) header.push_back(o.param2);
  for (const char* col : {"quantity", "value", "status"}) header.push_back(col);

  // rows of a previous partial run, keyed by point index
  std::map<int, std::vector<std::string>> done;
  if (o.resume && std::filesystem::exists(c.out)) {
    std::ifstream in(c.out);
    std::string line;
    std::getline(in, line);
    std::map<int, std::vector<std::string>> partial;
    while (std::getline(in, line)) {
      auto cells = split(line, ',');
      if (cells.size() < header.size()) continue;
      const int i = std::stoi(cells[0]), j = o.param2.empty() ? 0 : std::stoi(cells[1]);
      partial[i * n2 + j].push_back(line);
    }
    for (auto& [idx, lines] : partial)
      if (lines.size() == emit_list.size()) done[idx] = lines;
  }

  std::vector<std::vector<std::string>> out(total);
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;
  const QuadratureSettings qs = quad_settings(c);
  auto worker = [&] {
    for (int idx = next++; idx < total; idx = next++) {
      if (done.count(idx)) {
        out[idx] = done[idx];
        continue;
      }
      try {
        const int i = idx / n2, j = idx % n2;
        ModelParams p = base;
        const double v1 = value_at(o.from, o.to, o.steps, i);
        set_param(p, o.param, v1);
        double v2 = 0;
        if (!o.param2.empty()) {
          v2 = value_at(o.from2, o.to2, o.steps2, j);
          set_param(p, o.param2, v2);
        }
        for (const auto& row : sweep_point(p, emit_list, o.N, qs)) {
          std::string line = std::to_string(i);
          if (!o.param2.empty()) line += "," + std::to_string(j);
          line += "," + fmt(v1);
          if (!o.param2.empty()) line += "," + fmt(v2);
          line += "," + row.quantity + "," + row.value + "," + row.status;
          out[idx].push_back(line);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int nt = std::max(1, std::min(o.threads > 0 ? o.threads : default_threads(), total));
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::ostringstream body;
  for (std::size_t i = 0; i < header.size(); ++i) body << (i ? "," : "") << header[i];
  body << "\n";
  for (const auto& lines : out)
    for (const auto& l : lines) body << l << "\n";
  if (c.out.empty()) {
    std::cout << body.str();
    return 0;
  }
  std::ofstream(c.out) << body.str();
  json man = manifest_base(c, "sweep", &r);
  man["sweep"] = {{"param", o.param}, {"from", o.from}, {"to", o.to}, {"steps", o.steps}, {"emit", emit_list}, {"N", o.N}};
  if (!o.param2.empty()) man["sweep"]["param2"] = {{"name", o.param2}, {"from", o.from2}, {"to", o.to2}, {"steps", o.steps2}};
  man["resumed_points"] = done.size();
  man["output"] = c.out;
  std::ofstream(c.out + ".manifest.json") << man.dump(2) << "\n";
  return 0;
}

// ---- verify --------------------------------------------------------------------------------

int cmd_verify(const Common& c, const std::string& sizes) {
  const std::vector<ModelParams> models{HarmonicChain{1.0, 0.3}, ImagHopChain{1.0, 0.3, 0.2},
                                        Interpolation{1.0, 2.0, 1.0, 0.4}, DoubleChain{0.5, 0.3, 1.0, 2.0}};
  Table t{{"check", "model", "N", "value", "tol", "pass"}, {}};
  bool all = true;
  auto add = [&](const std::string& check, const ModelParams& p, int N, double v, double tol) {
    const bool ok = v <= tol;
    all = all && ok;
    t.add({check, model_name(p), static_cast<long long>(N), v, tol, ok});
  };
  for (const auto& p : models) {
    const QBHSpec spec = build_model(p);
    for (const auto& ns : split(sizes, ',')) {
      const int N = std::stoi(ns);
      const RingDynamical rd = build_ring(spec, N);
      add("pseudo_hermiticity", p, N, ring_pseudo_hermiticity_residual(rd), 1e-12);
      add("spectrum", p, N, ring_spectral_mismatch(spec, rd), 1e-10);
      const FiniteCM ring = ring_qpv_cm(rd), fin = finite_cm(spec, N);
      add("cm_consistency", p, N, (ring.gamma - fin.gamma).cwiseAbs().maxCoeff(), 1e-10);
      add("purity", p, N, purity_residual(ring.gamma), 1e-9);
      add("uncertainty", p, N, std::max(0.0, -uncertainty_min(ring.gamma)), 1e-10);
    }
  }
  emit(c, t, c.format.empty() ? "csv" : c.format, manifest_base(c, "verify", nullptr));
  return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadratic bosonic Hamiltonians: Krein stability, QPV correlations, entanglement, quantum metric"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common c;
  c.argv.assign(argv, argv + argc);

  auto* st = app.add_subcommand("stability", "dynamical/thermodynamic verdicts and Krein gaps");
  add_common(st, c, "text");
  auto* gp = app.add_subcommand("gap", "direct and indirect Krein gap");
  add_common(gp, c, "text");
  auto* bd = app.add_subcommand("bands", "band energies, Krein signatures and classification on the grid");
  add_common(bd, c, "csv");

  CorrOpts co;
  auto* cr = app.add_subcommand("correlations", "real-space QPV covariance blocks or stencil correlators");
  add_common(cr, c, "csv");
  cr->add_option("--rmax", co.rmax, "largest separation")->check(CLI::NonNegativeNumber);
  cr->add_option("--blocks", co.blocks, "comma-separated subset of xx,pp,xp,px");
  cr->add_option("--stencil", co.stencil, "composite operator, e.g. \"x@0+p@1\"");
  cr->add_flag("--allow-gapless", co.allow_gapless, "integrate through EP/KC momenta; divergent entries become inf");
  cr->add_option("--fit", co.fit, "fit correlation lengths for these blocks instead of listing values");
  cr->add_option("--fit-min", co.fit_min, "fit window start");
  cr->add_option("--fit-max", co.fit_max, "fit window end");
  cr->add_option("--fit-model", co.fit_model, "exp: A e^{-r/xi}; exp-power: A r^-power e^{-r/xi}")->default_str("exp-power");

  EEOpts eo;
  auto* ee = app.add_subcommand("entanglement", "entanglement entropy and log negativity of a ring region");
  add_common(ee, c, "csv");
  ee->add_option("--N", eo.sizes, "comma-separated ring sizes");
  ee->add_option("--B", eo.B, "region size (default N/2)");
  ee->add_option("--start", eo.start, "first site of the region");

  QmtOpts qo;
  auto* qm = app.add_subcommand("qmt", "pseudo-Hermitian quantum metric over model parameters");
  add_common(qm, c, "csv");
  qm->add_option("--k", qo.k, "momentum (comma-separated per axis)");
  qm->add_option("--vary", qo.vary, "parameters to differentiate (default: all)");
  qm->add_option("--band", qo.band, "particle band index");
  qm->add_option("--fd-step", qo.h, "relative finite-difference step");

  SweepOpts so;
  auto* sw = app.add_subcommand("sweep", "scan one or two parameters, long-format CSV");
  add_common(sw, c, "csv");
  sw->add_option("--param", so.param, "parameter to scan")->required();
  sw->add_option("--from", so.from, "first value");
  sw->add_option("--to", so.to, "last value");
  sw->add_option("--steps", so.steps, "number of values, endpoints included");
  sw->add_option("--param2", so.param2, "second parameter (outer product grid)");
  sw->add_option("--from2", so.from2, "first value of the second parameter");
  sw->add_option("--to2", so.to2, "last value of the second parameter");
  sw->add_option("--steps2", so.steps2, "number of values of the second parameter");
  sw->add_option("--emit", so.emit_list, "gap,gap_indirect,stable,thermo,energy,ee,en,xi,qmt");
  sw->add_option("--N", so.N, "ring size for ee/en");
  sw->add_option("--threads", so.threads, "worker threads (default $QBH_THREADS or all cores)");
  sw->add_flag("--resume", so.resume, "keep completed points already present in --out");

  std::string vsizes = "8,16,64";
  bool vall = false;
  auto* vf = app.add_subcommand("verify", "ring-oracle cross-checks as a pass table");
  add_common(vf, c, "csv");
  vf->add_flag("--all", vall, "run every check (the default)");
  vf->add_option("--N", vsizes, "ring sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!c.format.empty() && c.format != "csv" && c.format != "json" && c.format != "text")
      throw ConfigError("--format must be csv, json or text");
    if (*st) return cmd_stability(c);
    if (*gp) return cmd_gap(c);
    if (*bd) return cmd_bands(c);
    if (*cr) return cmd_correlations(c, co);
    if (*ee) return cmd_entanglement(c, eo);
    if (*qm) return cmd_qmt(c, qo);
    if (*sw) return cmd_sweep(c, so);
    if (*vf) return cmd_verify(c, vsizes);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedOperation& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return 2;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const SingularPointError& e) {
    std::cerr << "singular point: " << e.what() << "\n";
    return 4;
  } catch (const InstabilityError& e) {
    std::cerr << "instability: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: bad number (" << e.what() << ")\n";
    return 2;
  }
  return 0;
}
