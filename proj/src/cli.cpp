#include "cskin/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include <CLI11.hpp>

#include "cskin/decomposer.hpp"
#include "cskin/eval.hpp"
#include "cskin/runtime.hpp"

namespace cskin {

namespace fs = std::filesystem;

namespace {

std::size_t threads_from_env() {
  const char* value = std::getenv("CSKIN_THREADS");
  if (value == nullptr || *value == '\0') return 0;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(value, &end, 10);
  if (end == value || *end != '\0') throw Error(ErrorKind::InvalidArgument, "CSKIN_THREADS must be an integer");
  return static_cast<std::size_t>(n);
}

struct DecomposeArgs {
  std::string manifest;
  std::string output;
  std::size_t bones = 40;
  std::size_t influences = 8;
  std::size_t nnz = 6000;
  double p = 2.0;
  double lambda = 1e-4;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double eps = 1e-8;
  std::size_t iterations = 20000;
  std::uint64_t seed = 0;
  double init_sigma = 1e-2;
  bool hd = false;
  std::string progress;
  std::size_t progress_every = 100;
};

struct EvaluateArgs {
  std::string manifest;
  std::string csd;
  std::string hist;
};

struct PlayArgs {
  std::string csd;
  std::string animation;
  std::string output;
  std::string format = "csv";
};

struct SparsifyArgs {
  std::string csd;
  std::string output;
  double t_thresh_mm = 1.0;
  double r_thresh_deg = 1.0;
  std::string unit = "mm";
};

struct BenchArgs {
  std::string csd;
  std::string animation;
  std::size_t reps = 10;
};

struct SynthArgs {
  std::size_t n = 200;
  std::size_t s = 8;
  std::size_t bones = 4;
  std::size_t influences = 2;
  std::size_t nnz = 24;
  std::uint64_t seed = 1;
  std::string unit = "cm";
  std::string output;
};

int cmd_decompose(const DecomposeArgs& a, const CLI::App& sub, std::ostream& out) {
  const BlendshapeModel model = load_blendshape_set(load_manifest(a.manifest));
  SolverConfig config = a.hd ? SolverConfig::hd(a.bones, a.iterations) : SolverConfig{};
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  config.bones = a.bones;
  if (!a.hd || given("--influences")) config.influences = a.influences;
  if (a.hd) config.influences = std::min(config.influences, config.bones);
  if (!a.hd || given("--nnz")) config.nnz_budget = a.nnz == 0 ? std::nullopt : std::optional<std::size_t>(a.nnz);
  if (!a.hd || given("--p")) config.p = a.p;
  if (!a.hd || given("--lambda")) config.lambda = a.lambda;
  config.lr = a.lr;
  config.beta1 = a.beta1;
  config.beta2 = a.beta2;
  config.eps = a.eps;
  config.iterations = a.iterations;
  config.seed = a.seed;
  config.init_sigma = a.init_sigma;
  config.threads = threads_from_env();
  config.progress_interval = a.progress_every;

  std::ofstream progress_file;
  DecomposeHooks hooks;
  if (!a.progress.empty()) {
    progress_file.open(a.progress);
    if (!progress_file) throw Error(ErrorKind::MissingFile, "cannot write '" + a.progress + "'");
    hooks.progress = csv_progress_sink(progress_file);
  }
  const Decomposition decomp = decompose(model, config, hooks);
  save_decomposition(a.output, decomp);
  const ErrorStats stats = evaluate(model, decomp);
  out << "wrote " << a.output << ": N=" << decomp.num_vertices << " S=" << decomp.num_shapes
      << " P=" << decomp.num_bones << " K=" << decomp.max_influences << " nnz=" << decomp.theta.nonzeros() << '\n';
  out << "MAE_mm=" << stats.mae << " MXE_mm=" << stats.mxe << '\n';
  return 0;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const BlendshapeModel model = load_blendshape_set(load_manifest(a.manifest));
  const ErrorStats stats = evaluate(model, load_decomposition(a.csd));
  out << "MAE_mm=" << stats.mae << " MXE_mm=" << stats.mxe << '\n';
  if (!a.hist.empty()) {
    std::ofstream hist(a.hist);
    if (!hist) throw Error(ErrorKind::MissingFile, "cannot write '" + a.hist + "'");
    write_histogram_csv(hist, stats.histogram);
  }
  return 0;
}

int cmd_play(const PlayArgs& a, std::ostream& out) {
  const Decomposition decomp = load_decomposition(a.csd);
  const auto animation = read_animation_csv(a.animation);
  const auto frames = play(decomp, animation);
  fs::create_directories(a.output);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.%s", f, a.format.c_str());
    const fs::path path = fs::path(a.output) / name;
    if (a.format == "obj") {
      std::vector<Vec3> vertices;
      vertices.reserve(frames[f].size());
      for (const auto& v : frames[f]) vertices.push_back({v[0], v[1], v[2]});
      write_obj(path, vertices);
    } else {
      std::ofstream file(path);
      if (!file) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
      file.precision(9);
      for (const auto& v : frames[f]) file << v[0] << ',' << v[1] << ',' << v[2] << '\n';
    }
  }
  out << "wrote " << frames.size() << " frames to " << a.output << '\n';
  return 0;
}

int cmd_sparsify(const SparsifyArgs& a, std::ostream& out) {
  const Decomposition decomp = load_decomposition(a.csd);
  const double mm_per_unit = unit_scale_to_mm(parse_unit(a.unit));
  const double t_thresh = a.t_thresh_mm / mm_per_unit;
  const double r_thresh = a.r_thresh_deg * std::numbers::pi / 180.0;
  const TransformParams sparse = sparsify_dense(decomp.dense_theta(), t_thresh, r_thresh);
  Decomposition result = decomp;
  result.theta = build_csr(sparse);
  save_decomposition(a.output, result);
  out << "nnz " << decomp.theta.nonzeros() << " -> " << result.theta.nonzeros() << '\n';
  return 0;
}

int cmd_report_memory(const std::string& csd, std::ostream& out) {
  const Decomposition decomp = load_decomposition(csd);
  const MemoryReport report = memory_report(decomp);
  out << "P=" << decomp.num_bones << " S=" << decomp.num_shapes << " nnz=" << decomp.theta.nonzeros() << '\n';
  out << "dense_bytes=" << report.dense_bytes << " sparse_bytes=" << report.sparse_bytes
      << " ratio=" << report.ratio << '\n';
  return 0;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const Decomposition decomp = load_decomposition(a.csd);
  const auto frames = read_animation_csv(a.animation);
  const BenchReport report = bench_blend(decomp, frames, a.reps);
  out << "frames=" << report.frames << " reps=" << report.repetitions << '\n';
  out << "sparse_flops=" << report.sparse_flops << " dense_flops=" << report.dense_flops
      << " flop_ratio=" << report.flop_ratio() << '\n';
  out << "sparse_seconds=" << report.sparse_seconds << " dense_seconds=" << report.dense_seconds;
  if (report.sparse_seconds > 0.0) out << " speedup=" << report.dense_seconds / report.sparse_seconds;
  out << '\n';
  return 0;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthParams params;
  params.seed = a.seed;
  params.vertices = a.n;
  params.shapes = a.s;
  params.bones = a.bones;
  params.influences = a.influences;
  params.nnz = a.nnz;
  params.unit = parse_unit(a.unit);
  const SynthResult synth = synth_blendshapes(params);
  const fs::path manifest = write_synth(a.output, synth, params.unit);
  out << "wrote " << manifest.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compressed skinning decomposition for blendshape models", "cskin"};
  app.require_subcommand(1);

  DecomposeArgs dec;
  auto* decompose_cmd = app.add_subcommand("decompose", "Fit a sparse skinning decomposition to a blendshape set");
  decompose_cmd->add_option("manifest", dec.manifest, "Shape manifest (JSON)")->required();
  decompose_cmd->add_option("-o,--output", dec.output, "Output .csd file")->required();
  decompose_cmd->add_option("--bones", dec.bones, "Proxy-bone count P")->capture_default_str();
  decompose_cmd->add_option("--influences", dec.influences, "Max influences per vertex K")->capture_default_str();
  decompose_cmd->add_option("--nnz", dec.nnz, "Transform nonzero budget L (0 = unbounded)")->capture_default_str();
  decompose_cmd->add_option("--p", dec.p, "Loss exponent")->capture_default_str();
  decompose_cmd->add_option("--lambda", dec.lambda, "Laplacian weight")->capture_default_str();
  decompose_cmd->add_option("--lr", dec.lr, "Adam learning rate")->capture_default_str();
  decompose_cmd->add_option("--beta1", dec.beta1, "Adam beta1")->capture_default_str();
  decompose_cmd->add_option("--beta2", dec.beta2, "Adam beta2")->capture_default_str();
  decompose_cmd->add_option("--eps", dec.eps, "Adam epsilon")->capture_default_str();
  decompose_cmd->add_option("--iters", dec.iterations, "Iterations")->capture_default_str();
  decompose_cmd->add_option("--seed", dec.seed, "RNG seed")->capture_default_str();
  decompose_cmd->add_option("--init-sigma", dec.init_sigma, "Std of the Gaussian initialization")
      ->capture_default_str();
  decompose_cmd->add_flag("--hd", dec.hd, "High-detail preset: p=12, K=min(32,P), no budget, lambda=0");
  decompose_cmd->add_option("--progress", dec.progress, "Write iteration,loss,MAE,MXE CSV here");
  decompose_cmd->add_option("--progress-every", dec.progress_every, "Progress interval")->capture_default_str();

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Report MAE/MXE (mm) of a decomposition");
  evaluate_cmd->add_option("manifest", ev.manifest, "Shape manifest (JSON)")->required();
  evaluate_cmd->add_option("csd", ev.csd, "Decomposition file")->required();
  evaluate_cmd->add_option("--hist", ev.hist, "Write error histogram CSV");

  PlayArgs pl;
  auto* play_cmd = app.add_subcommand("play", "Skin every frame of a blendweight animation");
  play_cmd->add_option("csd", pl.csd, "Decomposition file")->required();
  play_cmd->add_option("animation", pl.animation, "Animation CSV (one frame per line)")->required();
  play_cmd->add_option("-o,--output", pl.output, "Output directory")->required();
  play_cmd->add_option("--format", pl.format, "Frame format")->check(CLI::IsMember({"csv", "obj"}))
      ->capture_default_str();

  SparsifyArgs sp;
  auto* sparsify_cmd = app.add_subcommand("sparsify", "Threshold small rotations/translations to zero");
  sparsify_cmd->add_option("csd", sp.csd, "Decomposition file")->required();
  sparsify_cmd->add_option("--t-thresh", sp.t_thresh_mm, "Translation threshold (mm)")->capture_default_str();
  sparsify_cmd->add_option("--r-thresh", sp.r_thresh_deg, "Rotation threshold (degrees)")->capture_default_str();
  sparsify_cmd->add_option("--unit", sp.unit, "Model unit of the decomposition")
      ->check(CLI::IsMember({"mm", "cm", "m"}))
      ->capture_default_str();
  sparsify_cmd->add_option("-o,--output", sp.output, "Output .csd file")->required();

  std::string memory_csd;
  auto* memory_cmd = app.add_subcommand("report-memory", "Sparse vs dense transform storage");
  memory_cmd->add_option("csd", memory_csd, "Decomposition file")->required();

  BenchArgs be;
  auto* bench_cmd = app.add_subcommand("bench", "Time sparse vs dense transform blending");
  bench_cmd->add_option("csd", be.csd, "Decomposition file")->required();
  bench_cmd->add_option("animation", be.animation, "Animation CSV")->required();
  bench_cmd->add_option("--reps", be.reps, "Repetitions (best-of)")->capture_default_str();

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic blendshape set with known ground truth");
  synth_cmd->add_option("--n", sy.n, "Vertices")->capture_default_str();
  synth_cmd->add_option("--s", sy.s, "Shapes")->capture_default_str();
  synth_cmd->add_option("--bones", sy.bones, "Ground-truth bones")->capture_default_str();
  synth_cmd->add_option("--influences", sy.influences, "Ground-truth influences per vertex")->capture_default_str();
  synth_cmd->add_option("--nnz", sy.nnz, "Ground-truth transform nonzeros")->capture_default_str();
  synth_cmd->add_option("--seed", sy.seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("--unit", sy.unit, "Model unit")->check(CLI::IsMember({"mm", "cm", "m"}))
      ->capture_default_str();
  synth_cmd->add_option("-o,--output", sy.output, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    const auto parsed = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (parsed.empty() ? app.help() : parsed.front()->help());
    return 2;
  }

  try {
    if (*decompose_cmd) return cmd_decompose(dec, *decompose_cmd, out);
    if (*evaluate_cmd) return cmd_evaluate(ev, out);
    if (*play_cmd) return cmd_play(pl, out);
    if (*sparsify_cmd) return cmd_sparsify(sp, out);
    if (*memory_cmd) return cmd_report_memory(memory_csd, out);
    if (*bench_cmd) return cmd_bench(be, out);
    if (*synth_cmd) return cmd_synth(sy, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace cskin
