#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcs/checks.hpp"
#include "dcs/conv.hpp"
#include "dcs/decoder.hpp"
#include "dcs/fusion.hpp"
#include "dcs/geometry.hpp"
#include "dcs/parallel.hpp"
#include "dcs/pgm.hpp"
#include "dcs/rng.hpp"
#include "dcs/scene.hpp"
#include "dcs/tensor.hpp"
#include "dcs/tensor_io.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct SizeArg {
  int w = 64;
  int h = 64;
};

SizeArg parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw CLI::ValidationError("--size", "expected WxH, got '" + s + "'");
  SizeArg out;
  try {
    out.w = std::stoi(s.substr(0, x));
    out.h = std::stoi(s.substr(x + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--size", "expected WxH, got '" + s + "'");
  }
  if (out.w <= 0 || out.h <= 0) throw CLI::ValidationError("--size", "dimensions must be positive");
  return out;
}

std::pair<double, double> parse_clamp(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--scale-clamp", "expected MIN:MAX, got '" + s + "'");
  try {
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--scale-clamp", "expected MIN:MAX, got '" + s + "'");
  }
}

// ---- check ------------------------------------------------------------------

int run_check(const std::string& suite, std::uint64_t seed, const std::string& out_dir) {
  if (!dcs::checks::is_suite(suite)) {
    std::cerr << "error: unknown suite '" << suite << "'\n";
    return kExitUsage;
  }
  const auto results = dcs::checks::run_suite(suite, seed);

  std::size_t name_w = 4;
  for (const auto& r : results) name_w = std::max(name_w, r.suite.size() + r.name.size() + 1);
  bool all_pass = true;
  for (const auto& r : results) {
    std::string label = r.suite + "/" + r.name;
    label.resize(name_w, ' ');
    std::printf("%s  %s  metric=%.3e  %s\n", label.c_str(), r.pass ? "PASS" : "FAIL", r.metric,
                r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  std::printf("%zu checks, %s\n", results.size(), all_pass ? "all passed" : "FAILURES present");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const std::string csv = out_dir + "/checks_" + suite + ".csv";
  try {
    dcs::checks::write_csv(csv, results);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return all_pass ? kExitPass : kExitCheckFailure;
}

// ---- demo -------------------------------------------------------------------

int run_demo(const std::string& out_dir, SizeArg size, std::uint64_t seed,
             const std::string& prior_mode, double d_min, double d_max,
             std::pair<double, double> clamp) {
  if (size.w % 16 != 0 || size.h % 16 != 0) {
    std::cerr << "error: --size must be a multiple of 16 in both dimensions\n";
    return kExitUsage;
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create '" << out_dir << "': " << ec.message() << "\n";
    return kExitIo;
  }

  const dcs::SyntheticScene scene = dcs::make_scene(size.h, size.w, seed, d_min, d_max);
  const std::vector<int> enc_ch{16, 12, 8, 6, 4};
  const std::vector<int> dec_ch{12, 10, 8, 6, 4};
  const auto pyramid = dcs::make_feature_pyramid(size.h, size.w, enc_ch, dcs::Rng(seed).split(7).next_u64());
  const dcs::DecoderParams params = dcs::make_decoder_params(enc_ch, dec_ch, seed);

  dcs::DecoderConfig config;
  config.conversion.scale_min = clamp.first;
  config.conversion.scale_max = clamp.second;

  std::optional<std::vector<dcs::Tensor4>> prior;
  if (prior_mode == "given") {
    std::vector<dcs::Tensor4> maps;
    for (const auto& f : pyramid)
      maps.push_back(dcs::resize(scene.depth, f.h(), f.w(), dcs::ResizeMode::kBilinear));
    prior = std::move(maps);
  } else if (prior_mode != "none") {
    std::cerr << "error: --prior must be 'none' or 'given'\n";
    return kExitUsage;
  }

  dcs::DecoderProbe probe;
  std::vector<dcs::Tensor4> depths;
  try {
    depths = dcs::decoder_forward(pyramid, params, config, prior, &probe);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailure;
  }

  std::ofstream summary(out_dir + "/summary.txt");
  if (!summary) {
    std::cerr << "error: cannot write to '" << out_dir << "'\n";
    return kExitIo;
  }
  summary.precision(12);
  summary << "seed " << seed << "\nsize " << size.w << "x" << size.h << "\nprior " << prior_mode
          << "\n";
  try {
    for (std::size_t i = 0; i < depths.size(); ++i) {
      const int level = 4 - static_cast<int>(i);
      const std::string stem = out_dir + "/depth_l" + std::to_string(level);
      dcs::write_tensor(stem + ".dten", depths[i]);
      dcs::write_pgm16(stem + ".pgm", depths[i], config.range.min_depth, config.range.max_depth);
      double lo = depths[i][0], hi = depths[i][0];
      for (std::size_t j = 0; j < depths[i].size(); ++j) {
        lo = std::min(lo, depths[i][j]);
        hi = std::max(hi, depths[i][j]);
      }
      summary << "depth_l" << level << " " << depths[i].w() << "x" << depths[i].h() << " range ["
              << lo << ", " << hi << "]\n";
    }
    for (std::size_t i = 0; i < probe.scale_low.size(); ++i) {
      const int level = 3 - static_cast<int>(i);
      const dcs::Tensor4 s_u = dcs::normalize_scale_map(probe.scale_low[i]);
      dcs::write_pgm16(out_dir + "/scale_l" + std::to_string(level) + ".pgm", s_u, -1.0, 1.0);
      double lo = s_u[0], hi = s_u[0];
      for (std::size_t j = 0; j < s_u.size(); ++j) {
        lo = std::min(lo, s_u[j]);
        hi = std::max(hi, s_u[j]);
      }
      summary << "scale_l" << level << " normalized range [" << lo << ", " << hi << "]\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  std::printf("demo written to %s (5 depth maps, %zu scale maps)\n", out_dir.c_str(),
              probe.scale_low.size());
  return kExitPass;
}

// ---- bench ------------------------------------------------------------------

int run_bench(const std::string& op, SizeArg size, int iters, int threads, double sigma) {
  if (iters <= 0 || threads <= 0) {
    std::cerr << "error: --iters and --threads must be positive\n";
    return kExitUsage;
  }
  dcs::Rng rng(1234);
  const int c = 16;
  const dcs::Tensor4 input = [&] {
    dcs::Tensor4 t(1, c, size.h, size.w);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
  }();
  dcs::ConvKernel kernel(c, c, 3);
  for (auto& w : kernel.weights) w = rng.uniform(-0.1, 0.1);
  dcs::ScaleConversion conv;
  dcs::Tensor4 kd(1, 1, size.h, size.w);
  for (std::size_t i = 0; i < kd.size(); ++i) kd[i] = rng.uniform(1.2, 8.8);
  const dcs::ScaleMap scale{kd, conv};

  std::function<dcs::Tensor4()> body;
  if (op == "conv") {
    body = [&] { return dcs::conv2d_standard(input, kernel); };
  } else if (op == "dcsconv") {
    body = [&] { return dcs::dcsconv_forward(input, kernel, scale); };
  } else if (op == "dmsf") {
    dcs::DmsfParams params;
    params.branches = {dcs::ConvKernel(c, c, 1), dcs::ConvKernel(c, c, 3), dcs::ConvKernel(c, c, 5)};
    for (auto& k : params.branches)
      for (auto& w : k.weights) w = rng.uniform(-0.1, 0.1);
    params.sigma = sigma;
    body = [&, params] { return dcs::dmsf_forward(input, params, scale); };
  } else if (op == "dcsf") {
    dcs::DcsfParams params = dcs::DcsfParams::make(c);
    auto fill = [&](dcs::ConvKernel& k) {
      for (auto& w : k.weights) w = rng.uniform(-0.1, 0.1);
    };
    fill(params.inject_c);
    fill(params.se_reduce);
    fill(params.se_expand);
    fill(params.inject_s);
    fill(params.spatial_conv);
    fill(params.out_proj);
    const dcs::Tensor4 f_c = input;
    body = [&, params, f_c] { return dcs::dcsf_forward(input, f_c, scale, params); };
  } else {
    std::cerr << "error: unknown op '" << op << "' (conv, dcsconv, dmsf, dcsf)\n";
    return kExitUsage;
  }

  // determinism pre-check: multi-thread result must match single-thread bitwise
  dcs::set_num_threads(1);
  const dcs::Tensor4 ref = body();
  dcs::set_num_threads(threads);
  const dcs::Tensor4 multi = body();
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (ref[i] != multi[i]) {
      std::cerr << "error: " << op << " output differs between 1 and " << threads
                << " threads at element " << i << "\n";
      return kExitCheckFailure;
    }

  auto time_at = [&](int n_threads) {
    dcs::set_num_threads(n_threads);
    std::vector<double> ms(iters);
    for (int i = 0; i < iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const dcs::Tensor4 out = body();
      const auto t1 = std::chrono::steady_clock::now();
      (void)out;
      ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    std::sort(ms.begin(), ms.end());
    auto q = [&](double p) { return ms[std::min<std::size_t>(ms.size() - 1, p * ms.size())]; };
    return std::array<double, 3>{q(0.5), q(0.1), q(0.9)};
  };

  std::printf("%-8s %dx%dx%dx%d  iters=%d\n", op.c_str(), 1, c, size.h, size.w, iters);
  std::printf("%8s  %10s  %10s  %10s\n", "threads", "median_ms", "p10_ms", "p90_ms");
  for (int n : {1, threads}) {
    const auto t = time_at(n);
    std::printf("%8d  %10.3f  %10.3f  %10.3f\n", n, t[0], t[1], t[2]);
    if (n == threads && threads == 1) break;
  }
  return kExitPass;
}

// ---- convert ----------------------------------------------------------------

int run_convert(const std::string& input, const std::string& output, double lo, double hi) {
  if (!(hi > lo)) {
    std::cerr << "error: range min must be below max\n";
    return kExitUsage;
  }
  dcs::Tensor4 t;
  try {
    t = dcs::read_tensor(input);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  if (t.n() != 1 || t.c() != 1) {
    std::cerr << "error: convert expects a 1x1xHxW tensor, got " << t.dims_str() << "\n";
    return kExitUsage;
  }
  try {
    dcs::write_pgm16(output, t, lo, hi);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-converted-scale convolution operator library: verification, demos and benchmarks"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string out_dir = ".";
  std::string size_str = "64x64";
  int threads = dcs::num_threads();
  std::string clamp_str = "1:9";

  std::string suite = "all";
  auto* check = app.add_subcommand("check", "Run verification suites");
  check->add_option("--suite", suite, "geometry, conv, dmsf, fusion, decoder, gradcheck or all");
  check->add_option("--seed", seed, "PRNG seed");
  check->add_option("--out", out_dir, "directory for CSV reports");
  check->add_option("--threads", threads, "worker threads");

  std::string prior_mode = "none";
  double d_min = 2.0, d_max = 40.0;
  auto* demo = app.add_subcommand("demo", "Decode a synthetic scene and write depth/scale maps");
  demo->add_option("--out", out_dir, "output directory");
  demo->add_option("--size", size_str, "scene size WxH (multiples of 16)");
  demo->add_option("--seed", seed, "PRNG seed");
  demo->add_option("--prior", prior_mode, "none (self-guided) or given (scene depth)");
  demo->add_option("--min-depth", d_min, "scene depth lower bound");
  demo->add_option("--max-depth", d_max, "scene depth upper bound");
  demo->add_option("--scale-clamp", clamp_str, "scale clamp MIN:MAX");
  demo->add_option("--threads", threads, "worker threads");

  std::string bench_op;
  int iters = 20;
  double sigma = 10.0;
  auto* bench = app.add_subcommand("bench", "Micro-benchmark one operator");
  bench->add_option("op", bench_op, "conv, dcsconv, dmsf or dcsf")->required();
  bench->add_option("--size", size_str, "input size WxH");
  bench->add_option("--iters", iters, "timed iterations");
  bench->add_option("--threads", threads, "worker threads for the multi-thread row");
  bench->add_option("--sigma", sigma, "fusion bandwidth for the dmsf op");

  std::string conv_in, conv_out;
  double range_min = 0.1, range_max = 100.0;
  auto* convert = app.add_subcommand("convert", "Convert a 1x1xHxW tensor file to a 16-bit PGM");
  convert->add_option("input", conv_in, "input .dten file")->required();
  convert->add_option("output", conv_out, "output .pgm file")->required();
  convert->add_option("--min-depth", range_min, "value mapped to 0");
  convert->add_option("--max-depth", range_max, "value mapped to 65535");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (threads <= 0) {
    std::cerr << "error: --threads must be positive\n";
    return kExitUsage;
  }
  dcs::set_num_threads(threads);

  try {
    if (check->parsed()) return run_check(suite, seed, out_dir);
    if (demo->parsed())
      return run_demo(out_dir, parse_size(size_str), seed, prior_mode, d_min, d_max,
                      parse_clamp(clamp_str));
    if (bench->parsed()) return run_bench(bench_op, parse_size(size_str), iters, threads, sigma);
    if (convert->parsed()) return run_convert(conv_in, conv_out, range_min, range_max);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailure;
  }
  return kExitUsage;
}
