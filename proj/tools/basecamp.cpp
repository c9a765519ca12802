// basecamp: one entry point for the compile, plan, simulate, tune, detect
// and run tools. Data goes to stdout or --out, diagnostics to stderr.
// Exit codes: 0 success, 1 diagnostics, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "basecamp/coord/dfg.hpp"
#include "basecamp/coord/execute.hpp"
#include "basecamp/coord/mapmatch.hpp"
#include "basecamp/coord/parser.hpp"
#include "basecamp/ir/compile.hpp"
#include "basecamp/ir/cost.hpp"
#include "basecamp/ir/json.hpp"
#include "basecamp/olympus/hls.hpp"
#include "basecamp/olympus/planner.hpp"
#include "basecamp/runtime/autotuner.hpp"
#include "basecamp/runtime/simulator.hpp"
#include "basecamp/sentinel/io.hpp"
#include "basecamp/sentinel/service.hpp"

namespace fs = std::filesystem;
using namespace basecamp;
using json = nlohmann::ordered_json;

namespace {

// A failure the user can act on; printed as "basecamp <cmd>: error: ...".
struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Failure("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure("cannot write '" + path + "'");
  out << text;
  if (!out) throw Failure("error while writing '" + path + "'");
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

// Diagnostics with the offending source line and a caret under the span.
void report(const CompileError& e, const std::string& file, const std::string& source) {
  for (const auto& d : e.diagnostics()) {
    std::cerr << format_diagnostic(d, file) << "\n";
    std::size_t begin = 0;
    if (d.span.offset > 0) {
      std::size_t nl = source.rfind('\n', d.span.offset - 1);
      if (nl != std::string::npos) begin = nl + 1;
    }
    std::size_t end = source.find('\n', begin);
    std::string line = source.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
    std::cerr << "  " << line << "\n  " << std::string(static_cast<std::size_t>(d.span.column - 1), ' ')
              << std::string(std::max<std::size_t>(1, std::min(d.span.length, line.size() + 1)), '^') << "\n";
  }
}

// ---- compile ---------------------------------------------------------------

struct CompileArgs {
  std::string file, emit = "ir", format = "f64", name, out, plan;
  int node = -1;
};

int cmd_compile(const CompileArgs& a) {
  std::string src = read_file(a.file);
  NumericFormat fmt = parse_format(a.format);
  ir::CompiledKernel k;
  try {
    k = ir::compile_kernel(src, fmt);
  } catch (const CompileError& e) {
    report(e, a.file, src);
    return 1;
  }
  if (a.emit == "ir") {
    json j = ir::to_json(k.ir);
    write_output(a.out, pretty(j));
    return 0;
  }
  olympus::KernelConfig cfg;
  if (!a.plan.empty()) {
    json p = read_json(a.plan);
    bool found = false;
    for (const auto& kp : p.at("kernels")) {
      if (a.node >= 0 && kp.at("node").get<int>() != a.node) continue;
      cfg.node = kp.at("node").get<int>();
      cfg.replication = kp.at("replication").get<int>();
      cfg.packing = kp.at("packing").get<int>();
      cfg.double_buffered = kp.at("double_buffered").get<bool>();
      cfg.tile_elements = kp.at("tile_elements").get<std::int64_t>();
      cfg.buffer_bytes = kp.at("buffer_bytes").get<std::int64_t>();
      found = true;
      break;
    }
    if (!found) throw Failure("plan '" + a.plan + "' has no kernel" + (a.node >= 0 ? " for node " + std::to_string(a.node) : ""));
  }
  std::string name = a.name.empty() ? fs::path(a.file).stem().string() : a.name;
  write_output(a.out, olympus::emit_hls_c(k.ir, cfg, name));
  return 0;
}

// ---- graph -----------------------------------------------------------------

struct GraphArgs {
  std::string file, out, costs, format = "f64";
};

int cmd_graph(const GraphArgs& a) {
  std::string src = read_file(a.file);
  coord::DataflowGraph g;
  try {
    g = coord::build_dfg(coord::parse_coord(src));
  } catch (const CompileError& e) {
    report(e, a.file, src);
    return 1;
  }
  auto problems = coord::validate(g);
  for (const auto& p : problems) std::cerr << a.file << ": error: " << p << "\n";
  if (!problems.empty()) return 1;

  json costs = a.costs.empty() ? json::object() : read_json(a.costs);
  fs::path dir = fs::path(a.file).parent_path();
  NumericFormat fmt = parse_format(a.format);
  for (auto& n : g.nodes) {
    if (n.kind != coord::NodeKind::offloaded_kernel) continue;
    if (costs.contains(n.callee)) {
      olympus::kernel_cost_from_json(costs.at(n.callee));  // reject malformed metadata early
      n.cost = costs.at(n.callee);
    } else if (coord::ends_with(n.path, ".ekl")) {
      std::string path = (dir / n.path).string();
      std::string ksrc = read_file(path);
      try {
        auto k = ir::compile_kernel(ksrc, fmt);
        n.cost = olympus::to_json(olympus::kernel_cost(ir::cost(k.ir, fmt), fmt));
      } catch (const CompileError& e) {
        report(e, path, ksrc);
        return 1;
      }
    }
  }
  write_output(a.out, pretty(coord::to_json(g)));
  return 0;
}

// ---- plan ------------------------------------------------------------------

struct PlanArgs {
  std::string dfg, platform, objective = "latency", out;
};

int cmd_plan(const PlanArgs& a) {
  coord::DataflowGraph g = coord::dfg_from_json(read_json(a.dfg));
  olympus::PlatformSpec p = olympus::platform_from_json(read_json(a.platform));
  olympus::PlanOptions opt;
  opt.objective = olympus::parse_objective(a.objective);
  try {
    write_output(a.out, pretty(olympus::to_json(olympus::plan(g, p, opt))));
  } catch (const olympus::PlanError& e) {
    std::cerr << "basecamp plan: error: " << e.constraint() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// ---- simulate / tune -------------------------------------------------------

std::map<int, double> plan_durations(const std::string& path) {
  std::map<int, double> out;
  if (path.empty()) return out;
  json plan = read_json(path);
  for (const auto& k : plan.at("kernels")) out[k.at("node").get<int>()] = k.at("makespan").get<double>();
  return out;
}

struct SimulateArgs {
  std::string plan, cluster, tasks, trace, summary;
  std::uint64_t seed = 0;
  double jitter = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  runtime::ClusterSpec c = runtime::cluster_from_json(read_json(a.cluster));
  runtime::TaskGraph g = runtime::task_graph_from_json(read_json(a.tasks), plan_durations(a.plan));
  runtime::Schedule s = runtime::schedule(g, c);
  runtime::SimOptions opt;
  opt.jitter = a.jitter;
  runtime::SimTrace t = runtime::simulate(g, c, s, a.seed, opt);
  write_output(a.trace, runtime::to_jsonl(t, g, c));
  if (!a.summary.empty()) {
    json unfinished = json::array();
    for (auto i : t.unfinished) unfinished.push_back(g.tasks[i].id);
    write_output(a.summary, pretty({{"schedule", runtime::to_json(s, g, c)},
                                    {"makespan", t.makespan},
                                    {"unfinished", unfinished}}));
  }
  return t.unfinished.empty() ? 0 : 1;
}

struct TuneArgs {
  std::string plan, cluster, tasks, out;
  std::uint64_t seed = 0;
  int iterations = 100;
  double noise = 0.1, epsilon = 0.1, alpha = 0.2;
};

int cmd_tune(const TuneArgs& a) {
  if (a.iterations < 1) throw Failure("--iterations must be >= 1");
  runtime::ClusterSpec c = runtime::cluster_from_json(read_json(a.cluster));
  runtime::TaskGraph g = runtime::task_graph_from_json(read_json(a.tasks), plan_durations(a.plan));
  if (g.knobs.empty()) throw Failure("task graph '" + a.tasks + "' declares no knobs to tune");
  runtime::TuningState st = runtime::make_tuning_state(g.knobs, a.epsilon, a.alpha);
  runtime::ResourceReport env = runtime::query_resources(c);
  Rng rng(a.seed);
  runtime::SimOptions opt;
  opt.jitter = a.noise;
  json history = json::array();
  for (int i = 0; i < a.iterations; ++i) {
    runtime::Configuration cfg = runtime::autotune_select(st, env, rng);
    runtime::TaskGraph bound = runtime::apply_configuration(g, cfg);
    runtime::SimTrace t = runtime::simulate(bound, c, runtime::schedule(bound, c), a.seed + 1 + static_cast<std::uint64_t>(i), opt);
    if (!t.unfinished.empty()) throw Failure("configuration left tasks unfinished");
    runtime::autotune_observe(st, cfg, t.makespan);
    history.push_back({{"configuration", runtime::to_json(cfg)}, {"makespan", t.makespan}});
  }
  auto best = runtime::best_configuration(st);
  json out = {{"configuration", best ? runtime::to_json(*best) : json()},
              {"iterations", a.iterations},
              {"state", runtime::to_json(st)},
              {"history", history}};
  write_output(a.out, pretty(out));
  return 0;
}

// ---- detect ----------------------------------------------------------------

struct DetectArgs {
  std::string data, labels, out;
  std::optional<int> trials;
  std::optional<double> seconds;
  std::uint64_t seed = 0;
  bool serve = false;
};

int cmd_detect(const DetectArgs& a) {
  if (a.serve) {
    sentinel::DetectionService svc;
    svc.serve(std::cin, std::cout);
    return 0;
  }
  if (a.data.empty()) throw Failure("--data is required unless --serve is given");
  auto data = sentinel::parse_series(read_file(a.data));
  std::optional<std::vector<std::size_t>> labels;
  if (!a.labels.empty()) labels = sentinel::parse_labels(read_file(a.labels));
  sentinel::Budget b = a.seconds ? sentinel::Budget::of_seconds(*a.seconds)
                                 : sentinel::Budget::of_trials(a.trials.value_or(100));
  auto sel = sentinel::select_model(data, labels, b, a.seed);
  if (sel.used_default) std::cerr << "basecamp detect: warning: no labels; using the default detector without search\n";
  write_output(a.out, pretty(sentinel::to_json(sentinel::detect(sel, data))));
  return 0;
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string file, inputs, format = "f64", out;
  std::uint64_t seed = 0;
};

int cmd_run(const RunArgs& a) {
  std::string src = read_file(a.file);
  coord::DataflowGraph g;
  try {
    g = coord::build_dfg(coord::parse_coord(src));
  } catch (const CompileError& e) {
    report(e, a.file, src);
    return 1;
  }
  std::vector<coord::Payload> args;
  for (const auto& p : g.inputs) {
    std::string path = (fs::path(a.inputs) / (p.name + ".json")).string();
    json j = read_json(path);
    coord::Payload pl;
    if (j.is_object() && j.contains("type") && j.contains("value")) {
      pl = {j.at("type").get<std::string>(), j.at("value")};
    } else {
      pl = {p.type, j};
    }
    args.push_back(std::move(pl));
  }
  coord::Implementations impls = demo::mapmatch_implementations();
  impls.kernel_format = parse_format(a.format);
  fs::path dir = fs::path(a.file).parent_path();
  impls.load_kernel = [dir](const std::string& path) { return read_file((dir / path).string()); };
  coord::Payload out = coord::execute_dfg(g, impls, args, a.seed);
  write_output(a.out, pretty({{"type", out.type}, {"value", out.value}}));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"basecamp: compile tensor kernels and coordination programs, plan FPGA architectures, simulate and "
               "tune cluster runs, and detect anomalies"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  CompileArgs ca;
  auto* compile = app.add_subcommand("compile", "Compile an EKL kernel to IR JSON or HLS-style C");
  compile->add_option("file", ca.file, "Kernel source (.ekl)")->required();
  compile->add_option("--emit", ca.emit, "Output kind")->check(CLI::IsMember({"ir", "c"}))->capture_default_str();
  compile->add_option("--format", ca.format, "Default real format: f64, fixed:I:F, ufixed:I:F or float:E:M")
      ->capture_default_str();
  compile->add_option("--name", ca.name, "C function name (default: file stem)");
  compile->add_option("--plan", ca.plan, "Take the hardware configuration for --emit c from this plan");
  compile->add_option("--node", ca.node, "Kernel node to take from --plan (default: the first)");
  compile->add_option("--out", ca.out, "Output file (default: stdout)");

  GraphArgs ga;
  auto* graph = app.add_subcommand("graph", "Build the dataflow graph of a coordination program");
  graph->add_option("file", ga.file, "Coordination source (.cdr)")->required();
  graph->add_option("--costs", ga.costs, "JSON object: callee -> {macs, bytes_in, bytes_out, format?}");
  graph->add_option("--format", ga.format, "Format for costs derived from .ekl kernels")->capture_default_str();
  graph->add_option("--out", ga.out, "Output file (default: stdout)");

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "Choose per-kernel FPGA configurations for a dataflow graph");
  plan->add_option("--dfg", pa.dfg, "Graph JSON from `basecamp graph`")->required();
  plan->add_option("--platform", pa.platform, "Platform JSON")->required();
  plan->add_option("--objective", pa.objective, "Objective")
      ->check(CLI::IsMember({"latency", "throughput"}))
      ->capture_default_str();
  plan->add_option("--out", pa.out, "Output file (default: stdout)");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Schedule a task graph with HEFT and simulate it on a cluster");
  simulate->add_option("--plan", sa.plan, "Plan JSON; fills fpga durations of tasks naming a plan_node");
  simulate->add_option("--cluster", sa.cluster, "Cluster JSON")->required();
  simulate->add_option("--tasks", sa.tasks, "Task graph JSON")->required();
  simulate->add_option("--seed", sa.seed, "Seed for duration jitter")->capture_default_str();
  simulate->add_option("--jitter", sa.jitter, "Relative duration jitter in [0, 1)")
      ->check(CLI::Range(0.0, 0.999))
      ->capture_default_str();
  simulate->add_option("--trace", sa.trace, "Event trace, JSON lines (default: stdout)");
  simulate->add_option("--summary", sa.summary, "Schedule and outcome JSON");

  TuneArgs ta;
  auto* tune = app.add_subcommand("tune", "Repeated simulation with the epsilon-greedy autotuner in the loop");
  tune->add_option("--plan", ta.plan, "Plan JSON; fills fpga durations of tasks naming a plan_node");
  tune->add_option("--cluster", ta.cluster, "Cluster JSON")->required();
  tune->add_option("--tasks", ta.tasks, "Task graph JSON with knobs")->required();
  tune->add_option("--iterations", ta.iterations, "Simulated runs")->capture_default_str();
  tune->add_option("--noise", ta.noise, "Relative duration jitter per run")
      ->check(CLI::Range(0.0, 0.999))
      ->capture_default_str();
  tune->add_option("--epsilon", ta.epsilon, "Exploration rate")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  tune->add_option("--alpha", ta.alpha, "EMA smoothing")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  tune->add_option("--seed", ta.seed, "Seed")->capture_default_str();
  tune->add_option("--out", ta.out, "Output file (default: stdout)");

  DetectArgs da;
  auto* detect = app.add_subcommand("detect", "Select an anomaly detector with TPE and report anomalous indexes");
  detect->add_option("--data", da.data, "Series: single-column CSV or JSON array");
  detect->add_option("--labels", da.labels, "Known anomaly indexes, CSV");
  auto* trials = detect->add_option("--budget-trials", da.trials, "Trials to evaluate (default 100)");
  auto* seconds = detect->add_option("--budget-seconds", da.seconds, "Wall-clock budget instead of trials");
  trials->excludes(seconds);
  detect->add_option("--seed", da.seed, "Seed")->capture_default_str();
  detect->add_option("--out", da.out, "Report file (default: stdout)");
  detect->add_flag("--serve", da.serve, "Serve select/detect/refit commands as JSON lines on stdin/stdout");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Interpret a coordination program end to end");
  run->add_option("file", ra.file, "Coordination source (.cdr)")->required();
  run->add_option("--inputs", ra.inputs, "Directory holding <parameter>.json per graph input")->required();
  run->add_option("--seed", ra.seed, "Seed for the node visiting order")->capture_default_str();
  run->add_option("--format", ra.format, "Format for .ekl kernels")->capture_default_str();
  run->add_option("--out", ra.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "basecamp: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*compile) return cmd_compile(ca);
    if (*graph) return cmd_graph(ga);
    if (*plan) return cmd_plan(pa);
    if (*simulate) return cmd_simulate(sa);
    if (*tune) return cmd_tune(ta);
    if (*detect) return cmd_detect(da);
    if (*run) return cmd_run(ra);
  } catch (const CompileError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << format_diagnostic(d) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "basecamp " << name << ": error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
