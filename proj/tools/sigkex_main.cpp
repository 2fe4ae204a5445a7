#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sigkex/bench.hpp"
#include "sigkex/budget.hpp"
#include "sigkex/cde.hpp"
#include "sigkex/chen.hpp"
#include "sigkex/extract.hpp"
#include "sigkex/io.hpp"
#include "sigkex/parallel.hpp"
#include "sigkex/pde.hpp"
#include "sigkex/version.hpp"

namespace {

using nlohmann::json;
using namespace sigkex;

struct InputOpts {
  std::string csv_file;
  bool csv_header = false;
  std::string json_literal;
  std::string generate = "random-uniform";
  std::size_t length = 150;
  std::size_t dim = 2;
  std::uint64_t seed = 42;
};

void add_input_options(CLI::App* cmd, InputOpts& in) {
  cmd->add_option("--input", in.csv_file, "CSV stream, one row per point");
  cmd->add_flag("--csv-header", in.csv_header, "first CSV row is a header");
  cmd->add_option("--json-path", in.json_literal,
                  "inline JSON path literal {\"points\": [[..],..]}");
  cmd->add_option("--generate", in.generate,
                  "built-in generator: random-uniform|axis|linear");
  cmd->add_option("--length,-L", in.length, "generated path length L");
  cmd->add_option("--dim,-d", in.dim, "generated path dimension");
  cmd->add_option("--seed", in.seed, "generator seed");
}

PiecewiseLinearPath load_path(const InputOpts& in) {
  if (!in.csv_file.empty())
    return read_path_csv_file(in.csv_file, in.csv_header);
  if (!in.json_literal.empty()) {
    json j = json::parse(in.json_literal, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON path literal");
    return path_from_json(j);
  }
  return generate_path(parse_path_kind(in.generate), in.length, in.dim,
                       in.seed);
}

json input_config(const InputOpts& in) {
  json j{{"seed", in.seed}, {"rng", "mt19937_64"}};
  if (!in.csv_file.empty()) {
    j["input"] = in.csv_file;
    j["csv_header"] = in.csv_header;
  } else if (!in.json_literal.empty()) {
    j["input"] = "<json literal>";
  } else {
    j["generate"] = in.generate;
    j["length"] = in.length;
    j["dim"] = in.dim;
  }
  return j;
}

MultiIndex parse_index(const std::string& text) {
  MultiIndex index;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    index.entries.push_back(std::stoi(item));
  if (index.entries.empty()) throw ParseError("empty multi-index");
  return index;
}

BlockPartition parse_blocks(const std::string& text) {
  BlockPartition p;
  std::stringstream ss(text);
  std::string block;
  while (std::getline(ss, block, '|')) p.blocks.push_back(parse_index(block));
  if (p.blocks.empty()) throw ParseError("empty block partition");
  return p;
}

std::vector<std::size_t> parse_depths(const std::string& text) {
  std::vector<std::size_t> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::size_t lo = std::stoul(text.substr(0, dots));
    const std::size_t hi = std::stoul(text.substr(dots + 2));
    for (std::size_t n = lo; n <= hi; ++n) out.push_back(n);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  }
  if (out.empty()) throw ParseError("empty depth list");
  return out;
}

void emit(const std::string& output, std::string text) {
  if (text.empty() || text.back() != '\n') text.push_back('\n');
  if (output.empty() || output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(output);
  if (!f) throw ParseError(output + ": cannot open for writing");
  f << text;
}

json envelope(const std::string& command, json config, json result,
              double seconds) {
  config["threads"] = hardware_threads();
  return json{{"tool", "sigkex"},
              {"version", kVersion},
              {"command", command},
              {"config", std::move(config)},
              {"timing", {{"seconds", seconds}}},
              {"result", std::move(result)}};
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

json kernel_diag(const ExtractionResult& res) {
  json out = json::array();
  for (const auto& k : res.kernels)
    out.push_back(json{{"beta", k.beta}, {"lambda", k.lambda},
                       {"value", k.value}});
  return out;
}

void dump_grid(const std::string& file, const KernelGrid& grid) {
  if (grid.retention != Retention::full)
    throw std::invalid_argument("grid dump requires full retention");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ParseError(file + ": cannot open for writing");
  out.write("SKEXGRID", 8);
  const std::uint64_t rows = grid.rows, cols = grid.cols;
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
}

int run_cli(int argc, char** argv) {
  CLI::App app{"sigkex: sparse signature coefficients through kernel filters"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");  // frees -h; coeff uses --h
  std::string output;
  unsigned threads = 0;
  app.add_option("--output,-o", output, "output file (default stdout)");
  app.add_option("--threads", threads, "worker pool cap (0 = hardware)");

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "emit a path as CSV");
  InputOpts gen_in;
  bool gen_header = false;
  add_input_options(gen, gen_in);
  gen->add_flag("--header", gen_header, "write a header row");

  // ---- oracle ----
  auto* oracle = app.add_subcommand(
      "oracle", "exact reference computations via the segment recursion");
  InputOpts oracle_in;
  add_input_options(oracle, oracle_in);
  std::optional<std::size_t> oracle_truncate;
  std::string oracle_coeff, oracle_anagram, oracle_other;
  bool oracle_other_header = false, oracle_subtable = false;
  double oracle_t_end = 1.0;
  std::optional<std::size_t> oracle_kernel_level;
  oracle->add_option("--truncate", oracle_truncate,
                     "dense truncated signature up to this level");
  oracle->add_option("--coeff", oracle_coeff, "coefficient multi-index, e.g. 1,2");
  oracle->add_option("--t-end", oracle_t_end, "right end of the interval");
  oracle->add_flag("--subtable", oracle_subtable,
                   "emit the per-segment prefix table");
  oracle->add_option("--anagram", oracle_anagram,
                     "anagram-class sum multi-index");
  oracle->add_option("--kernel-level", oracle_kernel_level,
                     "truncated kernel level (needs --other)");
  oracle->add_option("--other", oracle_other, "second path CSV for the kernel");
  oracle->add_flag("--other-header", oracle_other_header,
                   "second CSV has a header");

  // ---- kernel ----
  auto* kernel = app.add_subcommand("kernel", "Goursat-PDE kernel solver");
  InputOpts kernel_in;
  add_input_options(kernel, kernel_in);
  int gamma1 = 3, gamma2 = 3;
  bool use_axis = false, kernel_wavefront = false;
  double kernel_beta = 1.0;
  std::string kernel_lambda, kernel_other, kernel_dump, kernel_retain = "none";
  bool kernel_other_header = false;
  kernel->add_option("--gamma1", gamma1, "dyadic order along the data path");
  kernel->add_option("--gamma2", gamma2, "dyadic order along the filter");
  kernel->add_flag("--axis", use_axis, "axis-filter solver (else general)");
  kernel->add_option("--beta", kernel_beta, "scaling factor (axis solver)");
  kernel->add_option("--lambda", kernel_lambda,
                     "comma-separated scaling vector (axis solver)");
  kernel->add_option("--other", kernel_other,
                     "second path CSV (general solver)");
  kernel->add_flag("--other-header", kernel_other_header,
                   "second CSV has a header");
  kernel->add_flag("--wavefront", kernel_wavefront,
                   "anti-diagonal traversal");
  kernel->add_option("--retain", kernel_retain, "none|edges|full");
  kernel->add_option("--dump-grid", kernel_dump,
                     "binary grid dump (requires --retain full)");

  // ---- coeff ----
  auto* coeff = app.add_subcommand(
      "coeff", "isolated or semi-ordered signature coefficients");
  coeff->set_help_flag("--help", "print help");
  InputOpts coeff_in;
  add_input_options(coeff, coeff_in);
  std::string coeff_index, coeff_blocks, coeff_scheme = "central";
  std::string coeff_schedule = "nthroot";
  std::vector<std::string> coeff_sub;
  std::size_t coeff_M = 3;
  double coeff_h = 1.0;
  int coeff_gamma = 3;
  bool coeff_exact = false, coeff_retain = false, coeff_anagram = false;
  bool coeff_no_subtract = false;
  coeff->add_option("--index", coeff_index, "target multi-index, e.g. 1,2,3");
  coeff->add_option("--blocks", coeff_blocks,
                    "semi-ordered blocks, e.g. \"1,2|3\"");
  coeff->add_flag("--anagram", coeff_anagram,
                  "anagram-class sum instead of order isolation");
  coeff->add_option("--depth-M", coeff_M, "Vandermonde depth M");
  coeff->add_option("--scheme", coeff_scheme, "central|forward");
  coeff->add_option("--h", coeff_h, "finite-difference step");
  coeff->add_option("--gamma", coeff_gamma, "dyadic order (both directions)");
  coeff->add_option("--schedule", coeff_schedule, "uniform|nthroot");
  coeff->add_flag("--exact-truncated", coeff_exact,
                  "truncated-kernel backend (exact)");
  coeff->add_flag("--retain-grids", coeff_retain,
                  "keep full PDE grids for batch retrieval");
  coeff->add_flag("--no-subtract-one", coeff_no_subtract,
                  "disable the subtract-one stabilisation");
  coeff->add_option("--subcoeff", coeff_sub,
                    "sub-coefficient requests \"1,2@t\" (repeatable)");

  // ---- euler ----
  auto* euler = app.add_subcommand(
      "euler", "N-step Euler schemes for sparse linear CDEs");
  InputOpts euler_in;
  add_input_options(euler, euler_in);
  std::string euler_lattice, euler_kind = "birth-only", euler_backend = "chen";
  std::size_t euler_steps = 50, euler_N = 5, euler_gen = 13;
  double euler_tep = 0.5;
  bool toy_model = false;
  std::vector<std::string> euler_params;
  euler->add_option("--lattice", euler_lattice, "lattice sizes \"D,m\"");
  euler->add_option("--kind", euler_kind, "birth-only|birth-death");
  euler->add_option("--steps", euler_steps, "number of Euler steps");
  euler->add_option("--order-N", euler_N, "scheme order N");
  euler->add_option("--backend", euler_backend, "chen|kernel");
  euler->add_flag("--toy-model", toy_model, "generational birth-death model");
  euler->add_option("--generations", euler_gen, "toy model generations n");
  euler->add_option("--t-ep", euler_tep, "epidemic peak time");
  euler->add_option("--params", euler_params,
                    "toy model overrides a=..,b=..,f=..,dscale=..");

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "runtime vs coefficient depth");
  BenchConfig bench_cfg;
  std::string bench_depths = "1..8", bench_modes = "serial,parallel,chen";
  bench->add_option("--depths", bench_depths, "e.g. 1..8 or 2,4,6");
  bench->add_option("--length", bench_cfg.length, "path length L");
  bench->add_option("--repeats", bench_cfg.repeats, "repeats per point");
  bench->add_option("--depth-M", bench_cfg.depth_M, "Vandermonde depth M");
  bench->add_option("--gamma", bench_cfg.gamma, "dyadic order");
  bench->add_option("--modes", bench_modes, "subset of serial,parallel,chen");
  bench->add_option("--seed", bench_cfg.seed, "path seed");

  // allow --output/--threads after the subcommand name
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  Timer timer;

  if (gen->parsed()) {
    const auto path = load_path(gen_in);
    std::ostringstream ss;
    write_path_csv(ss, path, gen_header);
    emit(output, ss.str());
    return 0;
  }

  if (oracle->parsed()) {
    const auto path = load_path(oracle_in);
    json result;
    if (oracle_truncate) {
      const auto sig = truncated_signature(path, *oracle_truncate);
      json levels = json::array();
      for (const auto& level : sig.levels) levels.push_back(level);
      result["levels"] = std::move(levels);
    }
    if (!oracle_coeff.empty()) {
      const MultiIndex index = parse_index(oracle_coeff);
      result["coefficient"] = coefficient_chen(path, index, oracle_t_end);
      if (oracle_subtable)
        result["subtable"] = coefficient_chen_table(path, index);
    }
    if (!oracle_anagram.empty())
      result["anagram_sum"] =
          anagram_sum_oracle(path, parse_index(oracle_anagram));
    if (oracle_kernel_level) {
      if (oracle_other.empty())
        throw ParseError("--kernel-level needs --other");
      const auto other =
          read_path_csv_file(oracle_other, oracle_other_header);
      result["truncated_kernel"] =
          truncated_kernel(path, other, *oracle_kernel_level);
    }
    emit(output, envelope("oracle", input_config(oracle_in), result,
                          timer.seconds())
                     .dump(2));
    return 0;
  }

  if (kernel->parsed()) {
    const auto path = load_path(kernel_in);
    SolveOptions opts;
    opts.traversal =
        kernel_wavefront ? Traversal::wavefront : Traversal::rows;
    opts.threads = threads;
    opts.retention = kernel_retain == "full"    ? Retention::full
                     : kernel_retain == "edges" ? Retention::edges
                                                : Retention::none;
    const DyadicGrid grid{gamma1, gamma2};
    KernelGrid solved;
    if (use_axis) {
      std::vector<double> lambda(path.dim(), 1.0);
      if (!kernel_lambda.empty()) {
        lambda.clear();
        std::stringstream ss(kernel_lambda);
        std::string item;
        while (std::getline(ss, item, ','))
          lambda.push_back(std::stod(item));
      }
      solved = solve_goursat_axis(path, lambda, kernel_beta, grid, opts);
    } else {
      if (kernel_other.empty())
        throw ParseError("general solver needs --other");
      const auto other = read_path_csv_file(kernel_other, kernel_other_header);
      solved = solve_goursat_general(path, other, grid, opts);
    }
    if (!kernel_dump.empty()) dump_grid(kernel_dump, solved);
    json result{{"value", solved.final_value},
                {"rows", solved.rows},
                {"cols", solved.cols}};
    json config = input_config(kernel_in);
    config["gamma1"] = gamma1;
    config["gamma2"] = gamma2;
    config["axis"] = use_axis;
    emit(output,
         envelope("kernel", config, result, timer.seconds()).dump(2));
    return 0;
  }

  if (coeff->parsed()) {
    const auto path = load_path(coeff_in);
    ExtractionPlan plan;
    plan.scheme =
        coeff_scheme == "forward" ? FdKind::forward : FdKind::central;
    if (coeff_scheme != "forward" && coeff_scheme != "central")
      throw ParseError("scheme must be central or forward");
    plan.h = coeff_h;
    plan.depth_M = coeff_M;
    if (coeff_schedule == "uniform")
      plan.schedule = BetaSchedule::uniform;
    else if (coeff_schedule == "nthroot")
      plan.schedule = BetaSchedule::nth_root_uniform;
    else
      throw ParseError("schedule must be uniform or nthroot");
    plan.grid = DyadicGrid{coeff_gamma, coeff_gamma};
    plan.subtract_one = !coeff_no_subtract;
    plan.exact_truncated = coeff_exact;
    plan.retention = (coeff_retain || !coeff_sub.empty()) ? Retention::full
                                                          : Retention::none;
    plan.threads = threads;

    ExtractionResult res;
    std::string what;
    if (!coeff_blocks.empty()) {
      res = semiordered(path, parse_blocks(coeff_blocks), plan);
      what = "semiordered";
    } else if (coeff_anagram) {
      res = anagram_class(path, parse_index(coeff_index), plan);
      what = "anagram";
    } else {
      if (coeff_index.empty()) throw ParseError("--index is required");
      res = coefficient(path, parse_index(coeff_index), plan);
      what = "coefficient";
    }

    json result{{"kind", what},
                {"value", res.value},
                {"error_bound", res.bound},
                {"kernels", kernel_diag(res)}};
    if (!coeff_sub.empty()) {
      json subs = json::array();
      for (const auto& req : coeff_sub) {
        const auto at = req.find('@');
        const MultiIndex sub = parse_index(req.substr(0, at));
        const double t =
            at == std::string::npos ? 1.0 : std::stod(req.substr(at + 1));
        subs.push_back(json{{"index", sub.entries},
                            {"t", t},
                            {"value", batch_retrieve(res, sub, t)}});
      }
      result["subcoefficients"] = std::move(subs);
    }
    json config = input_config(coeff_in);
    config["scheme"] = coeff_scheme;
    config["h"] = coeff_h;
    config["depth_M"] = coeff_M;
    config["gamma"] = coeff_gamma;
    config["schedule"] = coeff_schedule;
    config["subtract_one"] = plan.subtract_one;
    config["exact_truncated"] = coeff_exact;
    emit(output, envelope("coeff", config, result, timer.seconds()).dump(2));
    return 0;
  }

  if (euler->parsed()) {
    EulerOptions opts;
    opts.order_N = euler_N;
    opts.backend = euler_backend == "kernel" ? EulerBackend::kernel_extraction
                                             : EulerBackend::chen_oracle;
    opts.threads = threads == 0 ? hardware_threads() : threads;
    std::vector<double> partition(euler_steps + 1);
    for (std::size_t i = 0; i <= euler_steps; ++i)
      partition[i] =
          static_cast<double>(i) / static_cast<double>(euler_steps);

    std::ostringstream csv;
    if (toy_model) {
      GenerationalParams params =
          GenerationalParams::defaults(euler_gen, euler_tep);
      for (const auto& kv : euler_params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw ParseError("params must look like key=value");
        const std::string key = kv.substr(0, eq);
        const double value = std::stod(kv.substr(eq + 1));
        if (key == "a")
          params.a = [value](std::size_t) { return value; };
        else if (key == "b")
          params.b = [value](std::size_t) { return value; };
        else if (key == "f")
          params.f = [value](std::size_t) { return value; };
        else if (key == "dscale") {
          const double scale = static_cast<double>(euler_gen + 1);
          params.d = [value, scale](std::size_t k) {
            return value * (scale - static_cast<double>(k)) / scale;
          };
        } else {
          throw ParseError("unknown toy-model parameter '" + key + "'");
        }
      }
      const auto model = generational_model(params, partition, opts);
      csv << "t";
      for (std::size_t k = 1; k <= euler_gen; ++k) csv << ",y" << k;
      csv << ",y_overflow\n";
      for (const auto& state : model.trajectory) {
        csv << state.t;
        for (double v : state.y) csv << ',' << v;
        csv << '\n';
      }
      std::cerr << "sparsity(N=" << euler_N
                << ") = " << model.scheme_sparsity << '\n';
    } else {
      if (euler_lattice.empty())
        throw ParseError("euler needs --lattice or --toy-model");
      const auto dm = parse_index(euler_lattice);
      if (dm.size() != 2) throw ParseError("--lattice needs \"D,m\"");
      const auto graph = lattice_cde(
          static_cast<std::size_t>(dm[0]), static_cast<std::size_t>(dm[1]),
          euler_kind == "birth-death" ? LatticeKind::birth_death
                                      : LatticeKind::birth_only);
      InputOpts in = euler_in;
      in.dim = graph.num_channels();
      const auto driver = load_path(in);
      std::vector<double> y0(graph.num_nodes, 1.0);
      const auto trajectory =
          euler_run(graph, driver, y0, partition, opts);
      csv << "t";
      for (std::size_t k = 1; k <= graph.num_nodes; ++k) csv << ",y" << k;
      csv << '\n';
      for (const auto& state : trajectory) {
        csv << state.t;
        for (double v : state.y) csv << ',' << v;
        csv << '\n';
      }
      std::cerr << "sparsity(N=" << euler_N << ") = "
                << sparsity(graph, euler_N) << '\n';
    }
    emit(output, csv.str());
    return 0;
  }

  if (bench->parsed()) {
    bench_cfg.depths = parse_depths(bench_depths);
    bench_cfg.modes.clear();
    std::stringstream ss(bench_modes);
    std::string mode;
    while (std::getline(ss, mode, ',')) bench_cfg.modes.push_back(mode);
    bench_cfg.threads = threads;
    const auto rows = run_bench(bench_cfg);
    std::ostringstream csv;
    write_bench_csv(csv, rows);
    emit(output, csv.str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid arguments: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
