// dts: layouts, joint generation runs, replay and rendering from the shell.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "dts/error.hpp"
#include "dts/layout.hpp"
#include "dts/render.hpp"
#include "dts/run.hpp"
#include "dts/tensor_io.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace lay = dts::layout;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dts::Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dts::Error("cannot write " + path);
  out << text;
}

// Flat reports: one key=value per line, or a single JSON object.
void emit(const json& report, const std::string& mode) {
  if (mode == "json") {
    std::cout << report.dump(2) << "\n";
    return;
  }
  for (const auto& [key, value] : report.items()) {
    if (value.is_string())
      std::cout << key << "=" << value.get<std::string>() << "\n";
    else
      std::cout << key << "=" << value.dump() << "\n";
  }
}

lay::Canvas parse_canvas(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw CLI::ValidationError("--canvas", "expected WxH, got " + text);
  try {
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--canvas", "expected WxH, got " + text);
  }
}

lay::CategoryCounts parse_expected(const std::string& text) {
  lay::CategoryCounts counts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--expected", "expected key=count, got " + item);
    const std::string key = item.substr(0, eq);
    const int value = std::stoi(item.substr(eq + 1));
    if (value < 0) throw CLI::ValidationError("--expected", "counts must be non-negative");
    if (key == "groups")
      counts.groups = value;
    else if (key == "humans")
      counts.humans = value;
    else if (key == "objects")
      counts.objects = value;
    else
      throw CLI::ValidationError("--expected", "unknown category " + key);
  }
  return counts;
}

void add_score(json& report, const std::string& name, const std::optional<lay::CategoryScore>& s) {
  if (!s) return;
  report[name + ".expected"] = s->expected;
  report[name + ".generated"] = s->generated;
  report[name + ".precision"] = s->precision;
  report[name + ".recall"] = s->recall;
  report[name + ".f1"] = s->f1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-scene layout and joint-diffusion toolkit"};
  app.require_subcommand(1);
  std::string report_mode = "kv";
  app.add_option("--report", report_mode, "Report format")->check(CLI::IsMember({"kv", "json"}));
  app.fallthrough();

  // layout ------------------------------------------------------------------
  auto* layout_cmd = app.add_subcommand("layout", "Layout documents");
  layout_cmd->require_subcommand(1);

  std::string validate_path;
  auto* validate_cmd = layout_cmd->add_subcommand("validate", "Check a layout document");
  validate_cmd->add_option("file", validate_path)->required();

  std::string metrics_path, expected_text, spatial_side;
  bool want_inclusion = false;
  auto* metrics_cmd = layout_cmd->add_subcommand("metrics", "Count and placement metrics");
  metrics_cmd->add_option("file", metrics_path)->required();
  metrics_cmd->add_option("--expected", expected_text, "e.g. groups=1,humans=3,objects=2");
  metrics_cmd->add_option("--spatial", spatial_side, "left or right")->check(CLI::IsMember({"left", "right"}));
  metrics_cmd->add_flag("--inclusion", want_inclusion, "Keypoint-in-group-box accuracy");

  lay::SynthesisSpec synth;
  std::string synth_canvas = "1024x768", synth_out;
  auto* synth_cmd = layout_cmd->add_subcommand("synth", "Procedural layout");
  synth_cmd->add_option("--groups", synth.groups)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--humans", synth.humans)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--objects", synth.objects)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--canvas", synth_canvas, "WxH pixels");
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--out", synth_out, "Output path (stdout when omitted)");

  std::string prompts_path;
  auto* prompts_cmd = layout_cmd->add_subcommand("prompts", "Print instruction prompts for a layout");
  prompts_cmd->add_option("file", prompts_path)->required();

  // generate ----------------------------------------------------------------
  dts::RunConfig cfg;
  std::string canvas_text, out_path = "out.dtxl";
  bool no_pyramid = false;
  auto* gen_cmd = app.add_subcommand("generate", "Joint generation run");
  gen_cmd->add_option("--layout", cfg.layout_path, "Layout document")->check(CLI::ExistingFile);
  gen_cmd->add_option("--canvas", canvas_text, "WxH pixels (defaults to the layout canvas)");
  gen_cmd->add_option("--window", cfg.window, "Window size in pixels")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--stride", cfg.stride, "Window stride in pixels")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--latent-scale", cfg.latent_scale)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--channels", cfg.channels)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--steps", cfg.steps, "Sampling steps")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--backend", cfg.backend)->check(CLI::IsMember({"analytic", "mock", "zero", "external"}));
  gen_cmd->add_option("--endpoint", cfg.endpoint, "tcp://host:port or exec:<command>");
  gen_cmd->add_option("--prior-mean", cfg.prior_mean);
  gen_cmd->add_option("--prior-std", cfg.prior_std)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", cfg.seed);
  gen_cmd->add_option("--pyramid-phases", cfg.phases)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--alpha", cfg.alpha);
  gen_cmd->add_option("--gamma-pert", cfg.gamma)->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--d-pert", cfg.d)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--tp", cfg.tp, "Normalized refinement step(s), one or one per phase")->delimiter(',');
  gen_cmd->add_option("--interp", cfg.interp)->check(CLI::IsMember({"bilinear", "lanczos"}));
  gen_cmd->add_option("--eta", cfg.eta)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--threads", cfg.threads);
  gen_cmd->add_flag("--no-pyramid", no_pyramid, "Joint diffusion only");
  gen_cmd->add_option("--out", out_path, "Output tensor (DTXL)");

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and compare digests");
  replay_cmd->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);

  std::string render_in, render_out;
  auto* render_cmd = app.add_subcommand("render", "Tensor to 8-bit PNG");
  render_cmd->add_option("--in", render_in)->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--out", render_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    json report;
    if (*validate_cmd) {
      const auto scene = lay::parse_scene_layout(read_file(validate_path));
      report["status"] = "ok";
      report["groups"] = scene.groups.size();
      report["instances"] = scene.instances.size();
    } else if (*metrics_cmd) {
      const auto scene = lay::parse_scene_layout(read_file(metrics_path));
      if (!expected_text.empty()) {
        const auto m = lay::numerical_matching(parse_expected(expected_text), scene);
        report["precision"] = m.precision;
        report["recall"] = m.recall;
        report["f1"] = m.f1;
        add_score(report, "groups", m.groups);
        add_score(report, "humans", m.humans);
        add_score(report, "objects", m.objects);
      }
      if (!spatial_side.empty())
        report["spatial." + spatial_side] =
            lay::spatial_matching(scene, spatial_side == "left" ? lay::Side::Left : lay::Side::Right);
      if (want_inclusion) report["inclusion"] = lay::inclusion_check(scene);
      if (report.empty()) throw dts::Error("nothing to report: pass --expected, --spatial or --inclusion");
    } else if (*synth_cmd) {
      synth.canvas = parse_canvas(synth_canvas);
      const std::string text = lay::serialize_scene_layout(lay::synthesize_layout_procedural(synth));
      if (synth_out.empty()) {
        std::cout << text;
        return 0;
      }
      write_file(synth_out, text);
      report["status"] = "ok";
      report["out"] = synth_out;
    } else if (*prompts_cmd) {
      const auto p = lay::build_instruction_prompts(lay::parse_scene_layout(read_file(prompts_path)));
      if (report_mode == "json") {
        report = {{"nat2hier", p.nat2hier}, {"global_grounding", p.global_grounding},
                  {"local_grounding", p.local_grounding}};
      } else {
        std::cout << "## nat2hier\n" << p.nat2hier << "\n## global_grounding\n" << p.global_grounding
                  << "\n## local_grounding\n" << p.local_grounding;
        return 0;
      }
    } else if (*gen_cmd) {
      if (!canvas_text.empty()) cfg.canvas = parse_canvas(canvas_text);
      if (const char* env = std::getenv("DTS_ENDPOINT"); env && *env) cfg.endpoint = env;
      cfg.pyramid = !no_pyramid;
      cfg.out = out_path;
      const auto r = dts::run_generate(cfg);
      report["status"] = "ok";
      report["out"] = cfg.out.string();
      report["manifest"] = r.manifest_path.string();
      report["sha256"] = r.output_digest;
      report["latent_width"] = r.plan.width;
      report["latent_height"] = r.plan.height;
      report["windows"] = r.plan.windows;
      report["phases"] = r.phases.size();
    } else if (*replay_cmd) {
      const auto r = dts::replay_manifest(read_file(manifest_path));
      report["expected"] = r.expected_digest;
      report["actual"] = r.actual_digest;
      report["match"] = r.matches();
      emit(report, report_mode);
      return r.matches() ? 0 : 1;
    } else if (*render_cmd) {
      std::ifstream in(render_in, std::ios::binary);
      const auto raw = dts::read_dtxl(in);
      if (raw.dims.size() != 2 && raw.dims.size() != 3)
        throw dts::FormatError("render supports rank 2 or 3 tensors, got rank " + std::to_string(raw.dims.size()));
      const auto image = dts::render_tensor(dts::to_latent(raw));
      dts::write_png(render_out, image);
      report["status"] = "ok";
      report["width"] = image.width;
      report["height"] = image.height;
      report["channels"] = image.channels;
    }
    emit(report, report_mode);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
