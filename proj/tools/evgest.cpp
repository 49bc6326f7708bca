// evgest: command-line front end for the event-based gesture pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
// violation.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evgest/evgest.hpp"

namespace fs = std::filesystem;
using namespace evgest;

namespace {

struct GeometryFlags {
  std::optional<std::uint32_t> width, height;
  std::uint32_t channels = 2;

  void add(CLI::App* cmd) {
    cmd->add_option("--width", width, "Sensor width for text input");
    cmd->add_option("--height", height, "Sensor height for text input");
    cmd->add_option("--channels", channels, "Channel count for text input")->capture_default_str();
  }
};

// Reads EVS1 or text events; text needs geometry flags.
EventStream load_events(const fs::path& path, const GeometryFlags& g) {
  const std::string data = read_file(path);
  if (looks_binary(data)) {
    try {
      return read_binary_events(detail::as_bytes(data));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  if (data.empty() && (!g.width || !g.height)) return EventStream{{1, 1, 1}, {}};
  if (!g.width || !g.height) {
    throw DataError(path.string() + ": bad magic (not an EVS1 file); pass --width/--height to read it as text");
  }
  try {
    return read_text_events(data, {*g.width, *g.height, g.channels});
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_events(const fs::path& path, const EventStream& s, const std::string& format) {
  if (format == "text") {
    write_file(path, write_text_events(s));
  } else {
    write_file(path, write_binary_events(s));
  }
}

std::string output_format(const std::string& requested, const fs::path& out) {
  if (!requested.empty()) return requested;
  return out.extension() == ".txt" ? "text" : "binary";
}

struct Dataset {
  std::vector<EventStream> clips;
  std::vector<std::string> labels;
};

Dataset load_dataset(const fs::path& manifest) {
  Dataset ds;
  for (const auto& rec : load_manifest(manifest)) {
    ds.clips.push_back(rec.load());
    ds.labels.push_back(rec.label);
  }
  return ds;
}

PipelineConfig load_config(const fs::path& path) {
  try {
    return parse_config(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string to_text(double v) { return detail::format_double(v); }

// ---------------------------------------------------------------------------

int run_convert(const fs::path& in, const fs::path& out, const std::string& to, const GeometryFlags& g) {
  const EventStream s = load_events(in, g);
  save_events(out, s, output_format(to, out));
  std::cout << "converted " << s.size() << " events: " << in.string() << " -> " << out.string() << "\n";
  return 0;
}

int run_filter(const fs::path& in, const fs::path& out, const std::string& to, const GeometryFlags& g,
               const std::string& grid, double tau_b, double alpha, const std::string& report_path) {
  DbsConfig cfg;
  {
    const auto x = grid.find('x');
    if (x == std::string::npos || !detail::parse_uint(std::string_view(grid).substr(0, x), cfg.grid_rows) ||
        !detail::parse_uint(std::string_view(grid).substr(x + 1), cfg.grid_cols)) {
      throw CLI::ValidationError("--grid", "expected RxC, e.g. 3x3");
    }
  }
  cfg.tau_b_us = tau_b;
  cfg.alpha = alpha;
  try {
    cfg.validate();
  } catch (const ContractError& e) {
    throw CLI::ValidationError("filter", e.what());
  }
  const EventStream s = load_events(in, g);
  DbsFilter filter(cfg, s.geometry);
  const FilterResult r = filter_stream(filter, s);
  save_events(out, r.kept, output_format(to, out));

  const std::string grid_text = std::to_string(cfg.grid_rows) + "x" + std::to_string(cfg.grid_cols);
  std::string report = "# dynamic background suppression: grid=" + grid_text + " tau_b=" + to_text(cfg.tau_b_us) +
                       " alpha=" + to_text(cfg.alpha) + "\n";
  report += "# kept " + std::to_string(r.stats.kept) + " of " + std::to_string(r.stats.total) + " events (" +
            (r.stats.total ? percent(r.stats.ratio()) + "%" : std::string("n/a")) + ")\n";
  report += format_kv({{"grid", grid_text},
                       {"tau_b", to_text(cfg.tau_b_us)},
                       {"alpha", to_text(cfg.alpha)},
                       {"kept", std::to_string(r.stats.kept)},
                       {"total", std::to_string(r.stats.total)},
                       {"retention_percent", r.stats.total ? percent(r.stats.ratio()) : std::string("n/a")}});
  std::cout << report;
  if (!report_path.empty()) write_file(report_path, report);
  return 0;
}

int run_train(const fs::path& manifest, const fs::path& config, const fs::path& model) {
  const PipelineConfig cfg = load_config(config);
  const Dataset ds = load_dataset(manifest);
  Pipeline pipeline(cfg);
  pipeline.train(ds.clips, ds.labels);
  save_model(model, pipeline);
  std::cout << "trained " << cfg.layers.size() << "-layer network on " << ds.clips.size() << " clips -> "
            << model.string() << "\n";
  return 0;
}

int run_eval(const fs::path& manifest, const fs::path& model, const std::string& report_path, bool timing) {
  Pipeline pipeline = load_model(model);
  const Dataset ds = load_dataset(manifest);
  const RunReport r = evaluate_clips(pipeline, ds.clips, ds.labels);
  const std::string text = format_report(r, timing);
  if (!report_path.empty()) write_file(report_path, text);
  std::cout << text;
  if (!timing) {
    std::cout << "# wall clock " << r.wall_clock_s << " s, " << static_cast<std::uint64_t>(r.events_per_second())
              << " events/s\n";
  }
  return 0;
}

int run_bench(const fs::path& manifest, const fs::path& config, unsigned repeats) {
  const PipelineConfig cfg = load_config(config);
  const Dataset ds = load_dataset(manifest);
  std::cout << format_bench(run_bench(cfg, ds.clips, ds.labels, repeats));
  return 0;
}

int run_synth(const fs::path& out_dir, const std::string& scene, const std::vector<std::string>& classes,
              std::uint32_t per_class, std::uint64_t seed, const GestureSetOptions& opt, double background_rate) {
  fs::create_directories(out_dir);
  std::vector<ClipRecord> manifest;
  auto emit = [&](const LabeledStream& ls, const std::string& name, const std::string& subject) {
    save_binary_events(out_dir / (name + ".evs"), ls.stream);
    write_file(out_dir / (name + ".tags"), format_tags(ls.tags));
    manifest.push_back({name + ".evs", ls.label, subject});
  };
  if (scene == "gestures") {
    const auto set = gen_gesture_set(classes, per_class, seed, opt);
    for (std::size_t i = 0; i < set.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04zu", set[i].data.label.c_str(), i % per_class);
      emit(set[i].data, name, set[i].subject);
    }
  } else {
    for (std::uint32_t i = 0; i < per_class; ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "composite_%04u", i);
      emit(gen_composite_scene(opt.geometry, 350'000, background_rate, 20.0, mix_seed(seed, i)), name, "s01");
    }
  }
  write_file(out_dir / "manifest.tsv", format_manifest(manifest));
  std::cout << "wrote " << manifest.size() << " clips and " << (out_dir / "manifest.tsv").string() << "\n";
  return 0;
}

int run_debug_surface(const fs::path& in, const GeometryFlags& g, std::size_t index, std::uint32_t radius,
                      double tau_us, bool merge) {
  EventStream s = load_events(in, g);
  if (merge) s = merge_polarity(s);
  if (index >= s.size()) throw DataError("event index " + std::to_string(index) + " out of range");
  TimestampMemory memory(s.geometry);
  for (std::size_t i = 0; i <= index; ++i) memory.record(s.events[i]);
  const TimeSurface surf = extract(memory, s.events[index], {radius, tau_us, s.geometry.channels});
  std::cout << format_surface(surf) << "valid = " << (is_valid(surf, radius) ? "true" : "false") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-based gesture recognition: background suppression, time-surface network, k-NN"};
  app.require_subcommand(1);

  GeometryFlags geom;
  fs::path in, out, manifest, config, model;
  std::string to, report_path;

  auto* convert = app.add_subcommand("convert", "Convert between text and EVS1 event files");
  convert->add_option("--in", in, "Input events")->required();
  convert->add_option("--out", out, "Output events")->required();
  convert->add_option("--to", to, "Output format (text|binary); default from --out extension")
      ->check(CLI::IsMember({"text", "binary"}));
  geom.add(convert);

  std::string grid = "3x3";
  double tau_b = 300.0, alpha = 2.0;
  auto* filter = app.add_subcommand("filter", "Apply dynamic background suppression");
  filter->add_option("--in", in, "Input events")->required();
  filter->add_option("--out", out, "Kept events")->required();
  filter->add_option("--to", to, "Output format (text|binary)")->check(CLI::IsMember({"text", "binary"}));
  filter->add_option("--grid", grid, "Cell grid RxC")->capture_default_str();
  filter->add_option("--tau-b", tau_b, "Activity decay constant (us)")->capture_default_str();
  filter->add_option("--alpha", alpha, "Threshold multiplier")->capture_default_str();
  filter->add_option("--report", report_path, "Also write the retention report here");
  geom.add(filter);

  auto* train = app.add_subcommand("train", "Train network and k-NN model");
  train->add_option("--manifest", manifest, "Training manifest")->required();
  train->add_option("--config", config, "Pipeline config file")->required();
  train->add_option("--model", model, "Model output")->required();

  bool timing = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a model on a manifest");
  eval->add_option("--manifest", manifest, "Test manifest")->required();
  eval->add_option("--model", model, "Trained model")->required();
  eval->add_option("--report", report_path, "Report output");
  eval->add_flag("--timing", timing, "Include wall clock and throughput in the report");

  unsigned repeats = 5;
  auto* bench = app.add_subcommand("bench", "Measure per-stage throughput");
  bench->add_option("--manifest", manifest, "Clips to process")->required();
  bench->add_option("--config", config, "Pipeline config file")->required();
  bench->add_option("--repeats", repeats, "Timed repetitions per stage")->capture_default_str()->check(
      CLI::Range(5u, 1000u));

  std::string scene = "gestures";
  std::string class_list = "up,down,left,right";
  std::uint32_t per_class = 50;
  std::uint64_t seed = 1;
  double background_rate = 15000.0;
  GestureSetOptions gopt;
  auto* synth = app.add_subcommand("synth", "Generate synthetic clips, tags and a manifest");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--scene", scene, "gestures | composite")->check(CLI::IsMember({"gestures", "composite"}))
      ->capture_default_str();
  synth->add_option("--classes", class_list, "Comma-separated gesture classes")->capture_default_str();
  synth->add_option("--clips-per-class", per_class, "Clips per class")->capture_default_str();
  synth->add_option("--seed", seed, "Random seed")->capture_default_str();
  synth->add_option("--width", gopt.geometry.width, "Sensor width")->capture_default_str();
  synth->add_option("--height", gopt.geometry.height, "Sensor height")->capture_default_str();
  synth->add_option("--noise-rate", gopt.noise_rate, "Gesture background events/s")->capture_default_str();
  synth->add_option("--background-rate", background_rate, "Composite background events/s per 3x3 cell")->capture_default_str();

  std::size_t index = 0;
  std::uint32_t radius = 2;
  double tau_us = 10'000.0;
  bool merge = false;
  auto* surface = app.add_subcommand("debug-surface", "Dump the time-surface of one event as a text grid");
  surface->add_option("--in", in, "Input events")->required();
  surface->add_option("--index", index, "Event index")->required();
  surface->add_option("--radius", radius, "Surface radius R")->capture_default_str();
  surface->add_option("--tau-us", tau_us, "Decay constant (us)")->capture_default_str();
  surface->add_flag("--merge", merge, "Merge polarities first");
  geom.add(surface);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*convert) return run_convert(in, out, to, geom);
    if (*filter) return run_filter(in, out, to, geom, grid, tau_b, alpha, report_path);
    if (*train) return run_train(manifest, config, model);
    if (*eval) return run_eval(manifest, model, report_path, timing);
    if (*bench) return run_bench(manifest, config, repeats);
    if (*synth) {
      std::vector<std::string> classes;
      std::stringstream ss(class_list);
      for (std::string c; std::getline(ss, c, ',');) {
        if (!c.empty()) classes.push_back(c);
      }
      for (const auto& c : classes) {
        if (c != "up" && c != "down" && c != "left" && c != "right") {
          throw CLI::ValidationError("--classes", "unknown gesture class '" + c + "'");
        }
      }
      if (classes.empty()) throw CLI::ValidationError("--classes", "no classes given");
      return run_synth(out, scene, classes, per_class, seed, gopt, background_rate);
    }
    if (*surface) return run_debug_surface(in, geom, index, radius, tau_us, merge);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
