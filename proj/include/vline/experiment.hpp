#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vline/errors.hpp"
#include "vline/io.hpp"
#include "vline/parallel.hpp"
#include "vline/phantom.hpp"
#include "vline/solver.hpp"
#include "vline/spectral.hpp"
#include "vline/transform.hpp"

// Experiment configuration and the command implementations behind the CLI.
//
// Configuration is flat INI text:
//
//   [grid]       n = 256                      (N; images are (N+1) x (N+1))
//   [geometry]   p = 200, q = 150, n_radii = 0 (0: N + 1)
//   [weight]     kind = exponential | constant, mu = 0.5
//   [phantom]    preset = standard | empty | custom
//                ellipse1 = cx, cy, ax, ay, rotation, amplitude
//                star1 = cx, cy, r_inner, r_outer, points, rotation, amplitude
//   [noise]      delta = 0.05
//   [run]        seed = 1, deterministic = false
//   [solver.NAME] regularizer, alpha, positivity, iterations, theta,
//                norm_safety, opnorm_iters, log_every, rel_tol
//   [reconstruct] data = path, truth = path, use_truth = true
//   [adjoint_test] n, p, q, trials
//   [spectral]   n, p, q, l_max, radial_nodes, angular_nodes, abel_nodes, psi_cutoff
//   [output]     dir = out, formats = f32, pgm, csv
//
// Every random consumer draws its seed from [run] seed via derive_seed.

namespace vline {

struct MethodConfig {
  std::string name;
  SolverConfig solver;
};

struct ExperimentConfig {
  int N = 256;
  int P = 200;
  int Q = 150;
  int n_radii = 0;
  std::string weight_kind = "exponential";
  double mu = 0.5;
  std::string phantom_preset = "standard";
  PhantomSpec phantom = PhantomSpec::standard();
  double noise_delta = 0.0;
  std::uint64_t seed = 1;
  bool deterministic = false;
  std::vector<MethodConfig> methods;
  std::string data_path;
  std::string truth_path;
  bool use_truth = true;
  int adjoint_N = 16;
  int adjoint_P = 20;
  int adjoint_Q = 10;
  int adjoint_trials = 20;
  int spectral_N = 128;
  int spectral_P = 200;
  int spectral_Q = 150;
  int spectral_lmax = 3;
  int spectral_radial_nodes = 0;   // 0: 4 N + 1
  int spectral_angular_nodes = 0;  // 0: 4 (N + 1)
  int spectral_abel_nodes = 2001;
  double spectral_psi_cutoff = 0.1;
  std::filesystem::path out_dir = "out";
  unsigned formats = io::all;

  WeightSpec weight() const {
    if (weight_kind == "exponential") return WeightSpec::exponential(mu);
    if (weight_kind == "constant") return WeightSpec::constant();
    throw ValidationError("unknown weight kind '" + weight_kind + "'");
  }

  ScanGeometry geometry() const {
    return {P, Q, n_radii > 0 ? n_radii : N + 1, 2.0, weight()};
  }

  ExecutionPolicy policy() const { return {deterministic, 0}; }

  void validate() const {
    require(N >= 2, "grid n must be >= 2");
    require(P >= 1 && Q >= 1, "geometry p and q must be positive");
    require(n_radii == 0 || n_radii >= 2, "n_radii must be 0 or >= 2");
    require(mu >= 0.0, "mu must be non-negative");
    require(noise_delta >= 0.0, "noise delta must be non-negative");
    require(adjoint_N >= 2 && adjoint_P >= 1 && adjoint_Q >= 1 && adjoint_trials >= 1,
            "invalid adjoint_test section");
    require(spectral_N >= 2 && spectral_P >= 1 && spectral_Q >= 1 && spectral_lmax >= 0,
            "invalid spectral section");
    require(spectral_psi_cutoff >= 0.0 && spectral_psi_cutoff < std::numbers::pi / 2,
            "psi_cutoff must be in [0, pi/2)");
    require(formats != 0, "at least one output format is required");
    (void)weight();
    phantom.validate();
    for (const auto& m : methods) m.solver.validate();
  }
};

namespace config_detail {

using boost::property_tree::ptree;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> number_list(const std::string& s, std::size_t expected,
                                       const std::string& what) {
  std::vector<double> v;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      require(used == item.size(), "");
    } catch (const std::exception&) {
      throw ValidationError(what + ": '" + item + "' is not a number");
    }
  }
  require(v.size() == expected, what + " needs " + std::to_string(expected) + " comma-separated values");
  return v;
}

inline const ptree* section(const ptree& root, const std::string& name) {
  const auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

template <typename T>
T parse_value(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ValidationError(where + ": expected true/false, got '" + s + "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    return s;
  } else {
    std::istringstream is(s);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof())
      throw ValidationError(where + ": cannot parse '" + s + "'");
    return v;
  }
}

template <typename T>
void read(const ptree* sec, const std::string& sec_name, const std::string& key, T& target) {
  if (!sec) return;
  const auto it = sec->find(key);
  if (it == sec->not_found()) return;
  target = parse_value<T>(it->second.data(), "[" + sec_name + "] " + key);
}

inline unsigned parse_formats(const std::string& s) {
  unsigned f = 0;
  for (const auto& item : split_list(s)) {
    if (item == "f32" || item == "raw") f |= io::raw;
    else if (item == "pgm") f |= io::pgm;
    else if (item == "csv") f |= io::csv;
    else throw ValidationError("unknown output format '" + item + "'");
  }
  return f;
}

inline std::string format_list(unsigned f) {
  std::vector<std::string> v;
  if (f & io::raw) v.push_back("f32");
  if (f & io::pgm) v.push_back("pgm");
  if (f & io::csv) v.push_back("csv");
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}

inline const std::map<std::string, std::string>& known_keys() {
  static const std::map<std::string, std::string> keys = {
      {"grid", "n"},
      {"geometry", "p q n_radii"},
      {"weight", "kind mu"},
      {"noise", "delta"},
      {"run", "seed deterministic"},
      {"reconstruct", "data truth use_truth"},
      {"adjoint_test", "n p q trials"},
      {"spectral", "n p q l_max radial_nodes angular_nodes abel_nodes psi_cutoff"},
      {"output", "dir formats"},
  };
  return keys;
}

inline void check_keys(const ptree& sec, const std::string& name, const std::string& allowed) {
  const std::string padded = " " + allowed + " ";
  for (const auto& [key, _] : sec)
    require(padded.find(" " + key + " ") != std::string::npos,
            "unknown key '" + key + "' in section [" + name + "]");
}

}  // namespace config_detail

/// Parses INI text; missing keys keep their defaults.
inline ExperimentConfig parse_config(std::istream& is) {
  using namespace config_detail;
  ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(is, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [name, sec] : root) {
    if (name.rfind("solver.", 0) == 0) {
      check_keys(sec, name,
                 "regularizer alpha positivity iterations theta norm_safety opnorm_iters "
                 "log_every rel_tol");
      continue;
    }
    if (name == "phantom") continue;
    const auto it = known_keys().find(name);
    require(it != known_keys().end(), "unknown config section [" + name + "]");
    check_keys(sec, name, it->second);
  }

  read(section(root, "grid"), "grid", "n", cfg.N);
  const ptree* geo = section(root, "geometry");
  read(geo, "geometry", "p", cfg.P);
  read(geo, "geometry", "q", cfg.Q);
  read(geo, "geometry", "n_radii", cfg.n_radii);
  const ptree* w = section(root, "weight");
  read(w, "weight", "kind", cfg.weight_kind);
  read(w, "weight", "mu", cfg.mu);
  read(section(root, "noise"), "noise", "delta", cfg.noise_delta);
  const ptree* run = section(root, "run");
  read(run, "run", "seed", cfg.seed);
  read(run, "run", "deterministic", cfg.deterministic);

  if (const ptree* ph = section(root, "phantom")) {
    read(ph, "phantom", "preset", cfg.phantom_preset);
    if (cfg.phantom_preset == "standard") {
      cfg.phantom = PhantomSpec::standard();
    } else if (cfg.phantom_preset == "empty" || cfg.phantom_preset == "custom") {
      cfg.phantom = PhantomSpec{};
    } else {
      throw ValidationError("unknown phantom preset '" + cfg.phantom_preset + "'");
    }
    for (const auto& [key, node] : *ph) {
      if (key == "preset") continue;
      require(cfg.phantom_preset == "custom", "phantom features require preset = custom");
      if (key.rfind("ellipse", 0) == 0) {
        const auto v = number_list(node.data(), 6, "[phantom] " + key);
        cfg.phantom.ellipses.push_back({{v[0], v[1]}, {v[2], v[3]}, v[4], v[5]});
      } else if (key.rfind("star", 0) == 0) {
        const auto v = number_list(node.data(), 7, "[phantom] " + key);
        require(v[4] == std::floor(v[4]), "[phantom] " + key + ": point count must be integral");
        cfg.phantom.stars.push_back({{v[0], v[1]}, v[2], v[3], static_cast<int>(v[4]), v[5], v[6]});
      } else {
        throw ValidationError("unknown key '" + key + "' in section [phantom]");
      }
    }
  }

  for (const auto& [name, sec] : root) {
    if (name.rfind("solver.", 0) != 0) continue;
    MethodConfig m;
    m.name = name.substr(7);
    require(!m.name.empty(), "solver section needs a name, e.g. [solver.tv]");
    std::string reg = "tv";
    read(&sec, name, "regularizer", reg);
    m.solver.regularizer = parse_regularizer(reg);
    if (m.solver.regularizer == Regularizer::none) m.solver.alpha = 0.0;
    read(&sec, name, "alpha", m.solver.alpha);
    read(&sec, name, "positivity", m.solver.positivity);
    read(&sec, name, "iterations", m.solver.max_iters);
    read(&sec, name, "theta", m.solver.theta);
    read(&sec, name, "norm_safety", m.solver.norm_safety);
    read(&sec, name, "opnorm_iters", m.solver.opnorm_iters);
    read(&sec, name, "log_every", m.solver.log_every);
    read(&sec, name, "rel_tol", m.solver.rel_tol);
    cfg.methods.push_back(std::move(m));
  }

  const ptree* rec = section(root, "reconstruct");
  read(rec, "reconstruct", "data", cfg.data_path);
  read(rec, "reconstruct", "truth", cfg.truth_path);
  read(rec, "reconstruct", "use_truth", cfg.use_truth);
  const ptree* adj = section(root, "adjoint_test");
  read(adj, "adjoint_test", "n", cfg.adjoint_N);
  read(adj, "adjoint_test", "p", cfg.adjoint_P);
  read(adj, "adjoint_test", "q", cfg.adjoint_Q);
  read(adj, "adjoint_test", "trials", cfg.adjoint_trials);
  const ptree* sp = section(root, "spectral");
  read(sp, "spectral", "n", cfg.spectral_N);
  read(sp, "spectral", "p", cfg.spectral_P);
  read(sp, "spectral", "q", cfg.spectral_Q);
  read(sp, "spectral", "l_max", cfg.spectral_lmax);
  read(sp, "spectral", "radial_nodes", cfg.spectral_radial_nodes);
  read(sp, "spectral", "angular_nodes", cfg.spectral_angular_nodes);
  read(sp, "spectral", "abel_nodes", cfg.spectral_abel_nodes);
  read(sp, "spectral", "psi_cutoff", cfg.spectral_psi_cutoff);
  const ptree* out = section(root, "output");
  std::string dir = cfg.out_dir.string();
  read(out, "output", "dir", dir);
  cfg.out_dir = dir;
  std::string formats;
  read(out, "output", "formats", formats);
  if (!formats.empty()) cfg.formats = parse_formats(formats);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config '" + path.string() + "'");
  return parse_config(is);
}

/// Writes the effective configuration (defaults applied) in the same format.
inline void write_config(std::ostream& os, const ExperimentConfig& c) {
  os << std::setprecision(17) << std::boolalpha;
  os << "[grid]\nn = " << c.N << "\n\n";
  os << "[geometry]\np = " << c.P << "\nq = " << c.Q << "\nn_radii = " << c.n_radii << "\n\n";
  os << "[weight]\nkind = " << c.weight_kind << "\nmu = " << c.mu << "\n\n";
  os << "[phantom]\npreset = custom\n";
  for (std::size_t i = 0; i < c.phantom.ellipses.size(); ++i) {
    const auto& e = c.phantom.ellipses[i];
    os << "ellipse" << i + 1 << " = " << e.center.x << ", " << e.center.y << ", " << e.semi_axes.x
       << ", " << e.semi_axes.y << ", " << e.rotation << ", " << e.amplitude << '\n';
  }
  for (std::size_t i = 0; i < c.phantom.stars.size(); ++i) {
    const auto& s = c.phantom.stars[i];
    os << "star" << i + 1 << " = " << s.center.x << ", " << s.center.y << ", " << s.inner_radius
       << ", " << s.outer_radius << ", " << s.points << ", " << s.rotation << ", " << s.amplitude
       << '\n';
  }
  os << "\n[noise]\ndelta = " << c.noise_delta << "\n\n";
  os << "[run]\nseed = " << c.seed << "\ndeterministic = " << c.deterministic << "\n\n";
  for (const auto& m : c.methods) {
    const auto& s = m.solver;
    os << "[solver." << m.name << "]\nregularizer = " << to_string(s.regularizer)
       << "\nalpha = " << s.alpha << "\npositivity = " << s.positivity
       << "\niterations = " << s.max_iters << "\ntheta = " << s.theta
       << "\nnorm_safety = " << s.norm_safety << "\nopnorm_iters = " << s.opnorm_iters
       << "\nlog_every = " << s.log_every << "\nrel_tol = " << s.rel_tol << "\n\n";
  }
  os << "[reconstruct]\n";
  if (!c.data_path.empty()) os << "data = " << c.data_path << '\n';
  if (!c.truth_path.empty()) os << "truth = " << c.truth_path << '\n';
  os << "use_truth = " << c.use_truth << "\n\n";
  os << "[adjoint_test]\nn = " << c.adjoint_N << "\np = " << c.adjoint_P << "\nq = " << c.adjoint_Q
     << "\ntrials = " << c.adjoint_trials << "\n\n";
  os << "[spectral]\nn = " << c.spectral_N << "\np = " << c.spectral_P << "\nq = " << c.spectral_Q
     << "\nl_max = " << c.spectral_lmax << "\nradial_nodes = " << c.spectral_radial_nodes
     << "\nangular_nodes = " << c.spectral_angular_nodes
     << "\nabel_nodes = " << c.spectral_abel_nodes << "\npsi_cutoff = " << c.spectral_psi_cutoff
     << "\n\n";
  os << "[output]\ndir = " << c.out_dir.string() << "\nformats = " << config_detail::format_list(c.formats)
     << '\n';
}

// ---------------------------------------------------------------------------
// Commands. Each writes into cfg.out_dir, echoes the effective configuration
// there and returns a process exit code.

enum ExitCode : int { kSuccess = 0, kValidation = 1, kIo = 2 };

namespace cmd_detail {

inline void prepare_output(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec || !std::filesystem::is_directory(cfg.out_dir))
    throw IoError("cannot create output directory '" + cfg.out_dir.string() + "'");
  const auto path = cfg.out_dir / "effective.ini";
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  write_config(os, cfg);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
}

inline std::ofstream open_text(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << std::setprecision(17);
  return os;
}

struct SimulatedData {
  ImageGrid phantom;
  Sinogram exact;
  std::optional<Sinogram> noisy;
  double achieved_delta = 0.0;
};

inline SimulatedData simulate(const ExperimentConfig& cfg) {
  SimulatedData d;
  d.phantom = make_phantom(cfg.N, cfg.phantom);
  d.exact = Projector(cfg.geometry(), cfg.N + 1, cfg.policy()).forward(d.phantom);
  if (cfg.noise_delta > 0.0) {
    auto [noisy, achieved] = add_noise(d.exact, cfg.noise_delta, derive_seed(cfg.seed, SeedStream::noise));
    d.noisy = std::move(noisy);
    d.achieved_delta = achieved;
  }
  return d;
}

}  // namespace cmd_detail

inline int cmd_phantom(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
  cfg.validate();
  cmd_detail::prepare_output(cfg);
  const ImageGrid f = make_phantom(cfg.N, cfg.phantom);
  io::write_image(cfg.out_dir / "phantom", f, cfg.formats);
  log << "phantom: " << f.n_side() << "x" << f.n_side() << " written to " << cfg.out_dir.string() << '\n';
  return kSuccess;
}

inline int cmd_forward(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
  cfg.validate();
  cmd_detail::prepare_output(cfg);
  const auto sim = cmd_detail::simulate(cfg);
  io::write_sinogram(cfg.out_dir / "sinogram", sim.exact, cfg.formats);
  if (sim.noisy) io::write_sinogram(cfg.out_dir / "sinogram_noisy", *sim.noisy, cfg.formats);
  auto os = cmd_detail::open_text(cfg.out_dir / "forward_summary.txt");
  os << "N = " << cfg.N << "\nP = " << cfg.P << "\nQ = " << cfg.Q
     << "\nweight = " << cfg.weight().label << "\nsinogram_shape = " << cfg.P << "x" << cfg.Q + 1
     << "\ndelta_target = " << cfg.noise_delta << "\ndelta_achieved = " << sim.achieved_delta
     << "\nseed = " << cfg.seed << '\n';
  log << "forward: sinogram " << cfg.P << "x" << cfg.Q + 1;
  if (sim.noisy) log << ", noise delta achieved " << sim.achieved_delta;
  log << '\n';
  return kSuccess;
}

inline int cmd_reconstruct(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
  cfg.validate();
  require(!cfg.methods.empty(), "reconstruct needs at least one [solver.NAME] section");
  cmd_detail::prepare_output(cfg);

  Sinogram data;
  std::optional<ImageGrid> truth;
  if (!cfg.data_path.empty()) {
    data = io::read_sinogram(cfg.data_path);
    require(data.vertex_count() == cfg.P && data.angle_count() == cfg.Q + 1,
            "data shape does not match the configured geometry");
  } else {
    auto sim = cmd_detail::simulate(cfg);
    data = sim.noisy ? std::move(*sim.noisy) : std::move(sim.exact);
    if (cfg.use_truth) truth = std::move(sim.phantom);
  }
  if (!cfg.truth_path.empty()) {
    truth = io::read_image(cfg.truth_path);
    require(truth->n_side() == cfg.N + 1, "truth image size does not match grid n");
  }

  const Projector projector(cfg.geometry(), cfg.N + 1, cfg.policy());
  std::map<std::pair<int, int>, double> norms;  // (operator class, power iterations)
  auto os = cmd_detail::open_text(cfg.out_dir / "summary.csv");
  os << "method,E2_final,R2_final,E2_min,iterations\n";
  for (const auto& m : cfg.methods) {
    SolverConfig sc = m.solver;
    sc.seed = derive_seed(cfg.seed, SeedStream::power_iteration);
    const int op_class = sc.regularizer == Regularizer::none ? 0
                         : sc.regularizer == Regularizer::l2 ? 1
                                                             : 2;
    const auto key = std::make_pair(op_class, sc.opnorm_iters);
    if (!norms.contains(key)) norms[key] = stacked_opnorm(projector, sc.regularizer, sc.opnorm_iters, sc.seed);
    const Reconstruction r = chambolle_pock(data, projector, sc, truth, norms[key]);
    io::write_image(cfg.out_dir / ("recon_" + m.name), r.image, cfg.formats);
    {
      auto ls = cmd_detail::open_text(cfg.out_dir / ("log_" + m.name + ".csv"));
      r.log.write_csv(ls);
    }
    const auto& last = r.log.last();
    os << m.name << ',';
    if (truth) os << last.e2;
    os << ',' << last.r2 << ',';
    if (truth) os << r.log.min_e2();
    os << ',' << last.iter << '\n';
    log << "reconstruct: " << std::left << std::setw(12) << m.name << " iters " << last.iter;
    if (truth) log << "  E2 " << last.e2;
    log << "  R2 " << last.r2 << '\n';
  }
  return kSuccess;
}

struct AdjointReport {
  double max_defect = 0.0;
  std::vector<double> defects;
};

/// Randomized dot-product test |<Cf,g> - <f,C*g>| / (|Cf| |g|). With
/// `mismatch` the adjoint uses a different weight (negative control).
inline AdjointReport adjoint_dot_test(int N, int P, int Q, const WeightSpec& weight, int trials,
                                      std::uint64_t seed, bool mismatch = false,
                                      ExecutionPolicy policy = {}) {
  const ScanGeometry geom = ScanGeometry::for_grid(N + 1, P, Q, weight);
  const Projector forward_op(geom, N + 1, policy);
  ScanGeometry other = geom;
  if (mismatch) other.weight = WeightSpec::exponential(1.0);
  const Projector adjoint_op(other, N + 1, policy);
  AdjointReport rep;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::normal_distribution<double> normal;
    ImageGrid f(N + 1);
    for (double& v : f.flat()) v = normal(rng);
    Sinogram g = geom.make_sinogram();
    for (double& v : g.flat()) v = normal(rng);
    const Sinogram cf = forward_op.forward(f);
    const ImageGrid ctg = adjoint_op.adjoint(g);
    const double defect = std::abs(dot(cf.flat(), g.flat()) - dot(f.flat(), ctg.flat())) /
                          (norm(cf.flat()) * norm(g.flat()));
    rep.defects.push_back(defect);
    rep.max_defect = std::max(rep.max_defect, defect);
  }
  return rep;
}

inline int cmd_adjoint_test(const ExperimentConfig& cfg, bool mismatch = false,
                            std::ostream& log = std::cout) {
  cfg.validate();
  const auto rep = adjoint_dot_test(cfg.adjoint_N, cfg.adjoint_P, cfg.adjoint_Q, cfg.weight(),
                                    cfg.adjoint_trials, derive_seed(cfg.seed, SeedStream::test_vectors),
                                    mismatch, cfg.policy());
  const bool ok = rep.max_defect < 1e-10;
  log << std::setprecision(3) << std::scientific << "adjoint-test: N=" << cfg.adjoint_N
      << " P=" << cfg.adjoint_P << " Q=" << cfg.adjoint_Q << " trials=" << cfg.adjoint_trials
      << (mismatch ? " (mismatched pair)" : "") << "\nmax relative defect = " << rep.max_defect
      << (ok ? "  PASS" : "  FAIL") << '\n'
      << std::defaultfloat;
  return ok ? kSuccess : kValidation;
}

struct SpectralRow {
  int ell;
  int k;
  double rel_error;
};

struct SpectralReport {
  std::vector<SpectralRow> rows;
  double margin = 0.0;
};

/// Compares sino_coeffs(forward(f)) with abel_apply(image_coeffs(f)) for
/// l = 0..l_max on psi <= pi/2 - cutoff.
inline SpectralReport spectral_check(const ImageGrid& f, const ScanGeometry& geom, int l_max,
                                     int radial_nodes, int angular_nodes, int abel_nodes,
                                     double psi_cutoff, ExecutionPolicy policy = {},
                                     const std::filesystem::path* csv_dir = nullptr) {
  const Sinogram g = Projector(geom, f.n_side(), policy).forward(f);
  const int N = f.intervals();
  if (radial_nodes <= 0) radial_nodes = 4 * N + 1;
  if (angular_nodes <= 0) angular_nodes = 4 * (N + 1);
  SpectralReport rep;
  for (int ell = 0; ell <= l_max; ++ell) {
    for (int k = 1; k <= (ell == 0 ? 1 : 2); ++k) {
      const HarmonicProfile data = sino_coeffs(g, ell, k);
      std::vector<double> psi;
      for (double p : data.grid)
        if (p <= std::numbers::pi / 2 - psi_cutoff + 1e-12) psi.push_back(p);
      const HarmonicProfile fprof = image_coeffs(f, ell, k, radial_nodes, angular_nodes);
      const HarmonicProfile abel = abel_apply({2, ell, geom.weight}, fprof, psi, abel_nodes);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < psi.size(); ++i) {
        num += (data.samples[i] - abel.samples[i]) * (data.samples[i] - abel.samples[i]);
        den += data.samples[i] * data.samples[i];
      }
      rep.rows.push_back({ell, k, den > 0.0 ? std::sqrt(num / den) : std::sqrt(num)});
      if (csv_dir) {
        auto os = cmd_detail::open_text(*csv_dir / ("spectral_l" + std::to_string(ell) + "_k" +
                                                    std::to_string(k) + ".csv"));
        os << "psi,coeff_forward,coeff_abel,abs_diff\n";
        for (std::size_t i = 0; i < psi.size(); ++i)
          os << psi[i] << ',' << data.samples[i] << ',' << abel.samples[i] << ','
             << std::abs(data.samples[i] - abel.samples[i]) << '\n';
      }
    }
  }
  const auto s_grid = linspace(0.0, 2.0, 2001);
  rep.margin = uniqueness_margin(geom.weight, 2, s_grid);
  return rep;
}

inline int cmd_verify_spectral(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
  cfg.validate();
  cmd_detail::prepare_output(cfg);
  const ImageGrid f = make_phantom(cfg.spectral_N, cfg.phantom);
  const ScanGeometry geom =
      ScanGeometry::for_grid(cfg.spectral_N + 1, cfg.spectral_P, cfg.spectral_Q, cfg.weight());
  const auto rep = spectral_check(f, geom, cfg.spectral_lmax, cfg.spectral_radial_nodes,
                                  cfg.spectral_angular_nodes, cfg.spectral_abel_nodes,
                                  cfg.spectral_psi_cutoff, cfg.policy(), &cfg.out_dir);
  auto os = cmd_detail::open_text(cfg.out_dir / "spectral_summary.txt");
  os << "N = " << cfg.spectral_N << "\nP = " << cfg.spectral_P << "\nQ = " << cfg.spectral_Q
     << "\nweight = " << geom.weight.label << "\npsi_max = " << std::numbers::pi / 2 - cfg.spectral_psi_cutoff
     << '\n';
  for (const auto& r : rep.rows) {
    os << "l = " << r.ell << " k = " << r.k << " relative_error = " << r.rel_error << '\n';
    log << "verify-spectral: l=" << r.ell << " k=" << r.k << " relative error " << r.rel_error << '\n';
  }
  os << "uniqueness_margin = " << rep.margin << '\n';
  log << "verify-spectral: uniqueness margin " << rep.margin << '\n';
  if (rep.margin <= 0.0) {
    os << "WARNING: uniqueness margin is not positive; the uniqueness hypothesis is not satisfied\n";
    log << "WARNING: uniqueness margin " << rep.margin
        << " <= 0; the uniqueness hypothesis is not satisfied for this weight\n";
  }
  return kSuccess;
}

}  // namespace vline
