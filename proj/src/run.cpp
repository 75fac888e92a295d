#include "dts/run.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "dts/conditions.hpp"
#include "dts/digest.hpp"
#include "dts/error.hpp"
#include "dts/layout.hpp"
#include "dts/schedule.hpp"
#include "dts/simd.hpp"
#include "dts/tensor_io.hpp"
#include "dts/wire.hpp"

namespace dts {

using json = nlohmann::ordered_json;

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<layout::SceneLayout> load_layout(const RunConfig& c) {
  if (c.layout_path.empty()) return std::nullopt;
  return layout::parse_scene_layout(read_text(c.layout_path));
}

layout::Canvas resolve_canvas(const RunConfig& c, const std::optional<layout::SceneLayout>& scene) {
  if (c.canvas) return *c.canvas;
  if (scene) return scene->canvas;
  throw Error("a canvas size is required when no layout is given");
}

std::size_t ceil_div(int px, int scale) { return static_cast<std::size_t>((px + scale - 1) / scale); }

InterpMethod parse_interp(const std::string& s) {
  if (s == "bilinear") return InterpMethod::Bilinear;
  if (s == "lanczos") return InterpMethod::Lanczos;
  throw Error("unknown interpolation method: " + s);
}

PyramidConfig pyramid_config(const RunConfig& c) {
  PyramidConfig p = PyramidConfig::with_phases(c.pyramid ? c.phases : 0);
  p.alpha = c.alpha;
  p.gamma = c.gamma;
  p.d = c.d;
  p.method = parse_interp(c.interp);
  if (!c.tp.empty()) {
    if (c.tp.size() == 1)
      p.refine_steps.assign(p.refine_steps.size(), c.tp.front());
    else
      p.refine_steps = c.tp;
  }
  p.validate();
  return p;
}

LatentPlan plan_for(Extent canvas, const RunConfig& c) {
  const Extent window{ceil_div(c.window, c.latent_scale), ceil_div(c.window, c.latent_scale)};
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(c.stride / c.latent_scale));
  const WindowPlan plan = grid_plan_factory(window, stride)(canvas);
  return {canvas.width, canvas.height, window.width, stride, plan.windows.size()};
}

json capabilities_json(const Capabilities& caps) {
  return {{"name", caps.name},
          {"accepts_conditions", caps.accepts_conditions},
          {"deterministic", caps.deterministic},
          {"max_concurrency", caps.max_concurrency},
          {"condition_kinds", caps.condition_kinds}};
}

json config_json(const RunConfig& c) {
  json j;
  j["layout"] = c.layout_path;
  if (c.canvas) j["canvas"] = {{"width", c.canvas->width}, {"height", c.canvas->height}};
  j["window"] = c.window;
  j["stride"] = c.stride;
  j["latent_scale"] = c.latent_scale;
  j["channels"] = c.channels;
  j["steps"] = c.steps;
  j["backend"] = c.backend;
  j["endpoint"] = c.endpoint;
  j["prior"] = {{"mean", c.prior_mean}, {"std", c.prior_std}};
  j["seed"] = c.seed;
  j["pyramid"] = c.pyramid;
  j["phases"] = c.phases;
  j["alpha"] = c.alpha;
  j["gamma_pert"] = c.gamma;
  j["d_pert"] = c.d;
  j["tp"] = c.tp;
  j["interp"] = c.interp;
  j["eta"] = c.eta;
  j["threads"] = c.threads;
  j["out"] = c.out.string();
  return j;
}

}  // namespace

LatentPlan latent_plan(const RunConfig& config) {
  const auto scene = load_layout(config);
  const layout::Canvas px = resolve_canvas(config, scene);
  return plan_for({ceil_div(px.height, config.latent_scale), ceil_div(px.width, config.latent_scale)}, config);
}

std::unique_ptr<Denoiser> make_backend(const RunConfig& config) {
  if (config.backend == "analytic")
    return std::make_unique<AnalyticGaussianDenoiser>(GaussianPrior{config.prior_mean, config.prior_std});
  if (config.backend == "mock") return std::make_unique<MockDenoiser>();
  if (config.backend == "zero") return std::make_unique<ZeroDenoiser>();
  if (config.backend == "external") {
    if (config.endpoint.empty()) throw Error("the external backend needs an endpoint");
    return std::make_unique<wire::ExternalDenoiser>(config.endpoint);
  }
  throw Error("unknown backend: " + config.backend);
}

RunResult run_in_memory(const RunConfig& config) {
  if (config.latent_scale < 1) throw Error("latent scale must be at least 1");
  if (config.window < config.latent_scale || config.stride < 1) throw Error("window and stride must be positive");
  if (config.channels == 0) throw Error("channel count must be positive");

  const auto scene = load_layout(config);
  const layout::Canvas px = resolve_canvas(config, scene);
  if (px.width <= 0 || px.height <= 0) throw Error("canvas must be non-empty");
  const Extent target{ceil_div(px.height, config.latent_scale), ceil_div(px.width, config.latent_scale)};

  const PyramidConfig pcfg = pyramid_config(config);
  const double shrink = std::pow(pcfg.alpha, pcfg.phases);
  const Extent base{std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(target.height / shrink))),
                    std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(target.width / shrink)))};

  const std::string caption = scene ? scene->global_caption : std::string{};
  ConditionProvider conditions = [&](Extent e) {
    if (scene) return rasterize_conditions_to(*scene, e);
    ConditionSet empty;
    empty.global_caption = caption;
    return empty;
  };
  const Extent window{ceil_div(config.window, config.latent_scale), ceil_div(config.window, config.latent_scale)};
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(config.stride / config.latent_scale));

  auto backend = make_backend(config);
  const NoiseSchedule sched = NoiseSchedule::linear(config.steps);
  VcjdOptions opts;
  opts.eta = config.eta;
  opts.threads = config.threads;

  PyramidResult pr = pppi(base, config.channels, conditions, pcfg, grid_plan_factory(window, stride), *backend, sched,
                          config.seed, opts);

  RunResult r;
  r.output = std::move(pr.output);
  r.phases = std::move(pr.phases);
  r.plan = plan_for(r.output.dims().extent(), config);
  r.output_digest = tensor_digest(r.output);

  json m;
  m["format"] = "dts-run-manifest";
  m["version"] = 1;
  m["config"] = config_json(config);
  m["resolved"] = {{"canvas_px", {{"width", px.width}, {"height", px.height}}},
                   {"base_latent", {{"width", base.width}, {"height", base.height}}},
                   {"pyramid_phases", pcfg.phases},
                   {"refine_steps", pcfg.refine_steps},
                   {"schedule", {{"kind", "linear"}, {"steps", sched.steps()}, {"train_steps", 1000}}}};
  m["seeds"] = {{"master", config.seed}};
  m["backend"] = capabilities_json(backend->capabilities());
  m["inputs"] = json::object();
  if (!config.layout_path.empty())
    m["inputs"]["layout"] = {{"path", config.layout_path}, {"sha256", sha256_file(config.layout_path)}};
  m["plan"] = {{"latent_width", r.plan.width}, {"latent_height", r.plan.height}, {"window", r.plan.window},
               {"stride", r.plan.stride}, {"windows", r.plan.windows}};
  json phases = json::array();
  for (const auto& p : r.phases)
    phases.push_back({{"latent_width", p.canvas.width}, {"latent_height", p.canvas.height},
                      {"windows", p.windows}, {"start_step", p.start_step}});
  m["phases"] = phases;
  m["simd"] = std::string(simd::isa_name(simd::active().isa));
  r.manifest_path = manifest_path_for(config.out);
  m["outputs"] = {{"tensor", config.out.string()},
                  {"manifest", r.manifest_path.string()},
                  {"dims", {r.output.height(), r.output.width(), r.output.channels()}},
                  {"sha256", r.output_digest}};
  r.manifest_json = m.dump(2) + "\n";
  return r;
}

RunResult run_generate(const RunConfig& config) {
  RunResult r = run_in_memory(config);
  save_latent(config.out, r.output);
  std::ofstream out(r.manifest_path, std::ios::binary);
  if (!out) throw Error("cannot write " + r.manifest_path.string());
  out << r.manifest_json;
  return r;
}

std::string manifest_path_for(const std::filesystem::path& out) { return out.string() + ".manifest.json"; }

RunConfig config_from_manifest(const std::string& manifest_json) {
  json m;
  try {
    m = json::parse(manifest_json);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (m.value("format", "") != "dts-run-manifest") throw FormatError("not a run manifest");
  try {
    const json& j = m.at("config");
    RunConfig c;
    c.layout_path = j.at("layout").get<std::string>();
    if (j.contains("canvas")) c.canvas = layout::Canvas{j["canvas"].at("width"), j["canvas"].at("height")};
    c.window = j.at("window");
    c.stride = j.at("stride");
    c.latent_scale = j.at("latent_scale");
    c.channels = j.at("channels");
    c.steps = j.at("steps");
    c.backend = j.at("backend");
    c.endpoint = j.at("endpoint");
    c.prior_mean = j.at("prior").at("mean");
    c.prior_std = j.at("prior").at("std");
    c.seed = j.at("seed");
    c.pyramid = j.at("pyramid");
    c.phases = j.at("phases");
    c.alpha = j.at("alpha");
    c.gamma = j.at("gamma_pert");
    c.d = j.at("d_pert");
    c.tp = j.at("tp").get<std::vector<double>>();
    c.interp = j.at("interp");
    c.eta = j.at("eta");
    c.threads = j.at("threads");
    c.out = j.at("out").get<std::string>();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest config: ") + e.what());
  }
}

ReplayResult replay_manifest(const std::string& manifest_json) {
  const RunConfig c = config_from_manifest(manifest_json);
  const json m = json::parse(manifest_json);
  if (m.contains("inputs") && m["inputs"].contains("layout")) {
    const std::string want = m["inputs"]["layout"].at("sha256");
    if (sha256_file(c.layout_path) != want) throw Error("layout file changed since the run: " + c.layout_path);
  }
  return {m.at("outputs").at("sha256").get<std::string>(), run_in_memory(c).output_digest};
}

}  // namespace dts
