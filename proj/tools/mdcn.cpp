// Command-line front end: train, super-resolve, evaluate, and inspect.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mdcn/checkpoint.hpp"
#include "mdcn/dataset.hpp"
#include "mdcn/errors.hpp"
#include "mdcn/fit.hpp"
#include "mdcn/image.hpp"
#include "mdcn/metrics.hpp"
#include "mdcn/net.hpp"
#include "mdcn/runcfg.hpp"
#include "mdcn/synth.hpp"
#include "mdcn/video.hpp"

namespace fs = std::filesystem;
using namespace mdcn;

namespace {

// Settings resolved from flags > config file > defaults, echoed at startup.
class Resolved {
 public:
  Resolved(const CLI::App* cmd, KvConfig file) : cmd_(cmd), file_(std::move(file)) {}

  int64_t num(const std::string& flag, int64_t flagval, int64_t dflt) {
    const std::string key = key_of(flag);
    int64_t v = dflt;
    if (cmd_->count(flag) > 0) {
      v = flagval;
    } else if (file_.has(key)) {
      v = file_.get_int(key, dflt);
    }
    echo_[key] = std::to_string(v);
    return v;
  }

  double real(const std::string& flag, double flagval, double dflt) {
    const std::string key = key_of(flag);
    double v = dflt;
    if (cmd_->count(flag) > 0) {
      v = flagval;
    } else if (file_.has(key)) {
      v = file_.get_double(key, dflt);
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    echo_[key] = buf;
    return v;
  }

  std::string str(const std::string& flag, const std::string& flagval,
                  const std::string& dflt) {
    const std::string key = key_of(flag);
    std::string v = dflt;
    if (cmd_->count(flag) > 0) {
      v = flagval;
    } else if (file_.has(key)) {
      v = file_.get_string(key, dflt);
    }
    echo_[key] = v;
    return v;
  }

  bool flag(const std::string& flag_name, bool dflt = false) {
    const std::string key = key_of(flag_name);
    bool v = dflt;
    if (cmd_->count(flag_name) > 0) {
      v = true;
    } else if (file_.has(key)) {
      v = file_.get_bool(key, dflt);
    }
    echo_[key] = v ? "true" : "false";
    return v;
  }

  void echo(std::ostream& os) const {
    for (const auto& [k, v] : echo_) os << "config: " << k << " = " << v << "\n";
  }

 private:
  static std::string key_of(const std::string& flag) {
    std::string key = flag.substr(flag.find_first_not_of('-'));
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
  }

  const CLI::App* cmd_;
  KvConfig file_;
  std::map<std::string, std::string> echo_;
};

KvConfig file_config(const std::string& path) {
  if (path.empty()) return KvConfig::parse("", "<none>");
  return KvConfig::parse_file(path);
}

std::string checkpoint_name(const std::string& tag, int64_t iter) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_iter%06lld.mdcn",
                static_cast<long long>(iter));
  return tag + buf;
}

SrFn model_forward(const ModelParams<float>& m, int64_t factor, bool ensemble) {
  const SrFn plain = [&m, factor](const ImageRGB& lr) {
    return from_tensor(scale_recurrent_sr(to_tensor(lr), m, factor));
  };
  if (!ensemble) return plain;
  return [plain](const ImageRGB& lr) { return self_ensemble(plain, lr); };
}

VideoSrFn video_forward(const ModelParams<float>& m, int64_t factor,
                        bool ensemble) {
  const VideoSrFn plain = [&m, factor](const TensorF& fused) {
    return scale_recurrent_sr(fused, m, factor);
  };
  if (!ensemble) return plain;
  return [plain](const TensorF& fused) {
    TensorD acc;
    TensorF first;
    for (int k = 0; k < 8; ++k) {
      TensorF out = dihedral_unapply(plain(dihedral_apply(fused, k)), k);
      if (k == 0) {
        first = out;
        acc = TensorD(out.shape());
        acc.fill(0.0);
      }
      for (int64_t i = 0; i < out.numel(); ++i) {
        acc.data()[static_cast<size_t>(i)] +=
            static_cast<double>(out.data()[static_cast<size_t>(i)]);
      }
    }
    for (int64_t i = 0; i < first.numel(); ++i) {
      first.data()[static_cast<size_t>(i)] =
          static_cast<float>(acc.data()[static_cast<size_t>(i)] / 8.0);
    }
    return first;
  };
}

// --------------------------------------------------------------- train ----

struct TrainCli {
  std::string config, data, out = "checkpoints", tag = "model", loss = "l1";
  std::string warm_start;
  int64_t seed = 0, scale = 2, blocks = 12, units = 6, feat = 64, growth = 36;
  int64_t iters = 1000, batch = -1, patch = 32, halve_every = 200000;
  int64_t record_every = 100, checkpoint_every = 0;
  double lr = 1e-4, clip_norm = 0.0;
  CLI::App* cmd = nullptr;
};

int run_train(const TrainCli& a) {
  Resolved r(a.cmd, file_config(a.config));
  const std::string data = r.str("--data", a.data, "");
  const std::string out = r.str("--out", a.out, "checkpoints");
  const std::string tag = r.str("--tag", a.tag, "model");
  const int64_t seed = r.num("--seed", a.seed, 0);
  const int64_t scale = r.num("--scale", a.scale, 2);
  const bool video = r.flag("--video");
  NetConfig net;
  net.blocks = r.num("--blocks", a.blocks, 12);
  net.units = r.num("--units", a.units, 6);
  net.feat = r.num("--feat", a.feat, 64);
  net.growth = r.num("--growth", a.growth, 36);
  net.scale = scale;
  net.in_channels = video ? 15 : 3;
  net.global_skip = r.flag("--global-skip");

  TrainConfig tc;
  tc.max_iters = r.num("--iters", a.iters, 1000);
  tc.batch_size = r.num("--batch", a.batch, video ? 8 : 16);
  tc.adam.lr0 = r.real("--lr", a.lr, 1e-4);
  tc.adam.halve_every = r.num("--halve-every", a.halve_every, 200000);
  tc.loss_kind = parse_loss(r.str("--loss", a.loss, "l1"));
  tc.seed = static_cast<uint64_t>(seed);
  tc.clip_norm = r.real("--clip-norm", a.clip_norm, 0.0);
  tc.record_every = r.num("--record-every", a.record_every, 100);
  tc.checkpoint_every = r.num("--checkpoint-every", a.checkpoint_every, 0);
  const int64_t patch = r.num("--patch", a.patch, 32);
  const bool augment = !r.flag("--no-augment");
  const bool submean = r.flag("--subtract-mean");
  const std::string warm = r.str("--warm-start", a.warm_start, "");
  r.echo(std::cout);

  if (data.empty()) throw ConfigError("train needs --data <hr-image-dir>");
  net.validate();

  ModelParams<float> model = ModelParams<float>::init(net, static_cast<uint64_t>(seed));
  if (!warm.empty()) {
    ModelParams<float> src = load_checkpoint(warm);
    WarmStartSummary ws = warm_start(model, src);
    std::cout << "warm start: " << ws.copied.size() << " copied, "
              << ws.adapted.size() << " adapted, " << ws.skipped.size()
              << " skipped\n";
  }

  BatchFn next_batch;
  std::vector<std::string> data_warnings;
  std::shared_ptr<PatchDataset> img_ds;
  std::shared_ptr<VideoPatchDataset> vid_ds;
  if (video) {
    VideoDatasetSpec spec;
    spec.clip_root = data;
    spec.scale = scale;
    spec.patch_size = patch;
    spec.augment = augment;
    vid_ds = std::make_shared<VideoPatchDataset>(spec);
    data_warnings = vid_ds->warnings();
    const int64_t bs = tc.batch_size;
    next_batch = [vid_ds, bs](RandomEngine& rng) {
      return vid_ds->sample_batch(bs, rng);
    };
  } else {
    DatasetSpec spec;
    spec.hr_dir = data;
    spec.scale = scale;
    spec.patch_size = patch;
    spec.augment = augment;
    spec.subtract_mean = submean;
    img_ds = std::make_shared<PatchDataset>(spec);
    data_warnings = img_ds->warnings();
    const int64_t bs = tc.batch_size;
    next_batch = [img_ds, bs](RandomEngine& rng) {
      return img_ds->sample_batch(bs, rng);
    };
  }
  for (const auto& w : data_warnings) std::cout << "warning: " << w << "\n";

  fs::create_directories(out);
  const SnapshotFn snapshot = [&](const ModelParams<float>& m, int64_t iter) {
    const std::string path = (fs::path(out) / checkpoint_name(tag, iter)).string();
    save_checkpoint(path, m);
    const std::string latest = (fs::path(out) / (tag + "_latest.mdcn")).string();
    save_checkpoint(latest, m);
    std::cout << "checkpoint: " << path << "\n";
  };

  FitResult res = fit(model, next_batch, tc, scale, snapshot);
  const std::string log_path = (fs::path(out) / (tag + "_loss.txt")).string();
  std::ofstream log(log_path);
  log << loss_table(res.history);
  std::cout << "loss log: " << log_path << "\n";
  if (res.aborted) {
    std::cout << "aborted: " << res.abort_reason << " (last checkpoint retains "
              << res.completed_iters << " finished iterations)\n";
    return 2;
  }
  if (!res.history.empty()) {
    std::cout << "final loss: " << res.history.back().loss << " after "
              << res.completed_iters << " iterations\n";
  }
  return 0;
}

// ------------------------------------------------------------------ sr ----

struct SrCli {
  std::string config, checkpoint, out = ".";
  std::vector<std::string> inputs;
  int64_t scale = 0, seed = 0;
  CLI::App* cmd = nullptr;
};

int run_sr(const SrCli& a) {
  Resolved r(a.cmd, file_config(a.config));
  const std::string ckpt = r.str("--checkpoint", a.checkpoint, "");
  const std::string out = r.str("--out", a.out, ".");
  const bool ensemble = r.flag("--ensemble");
  const bool video = r.flag("--video");
  int64_t factor = r.num("--scale", a.scale, 0);
  r.num("--seed", a.seed, 0);
  r.echo(std::cout);

  if (ckpt.empty()) throw ConfigError("sr needs --checkpoint");
  if (a.inputs.empty()) throw ConfigError("sr needs at least one input");
  ModelParams<float> m = load_checkpoint(ckpt);
  if (factor == 0) factor = m.config.scale;
  try {
    passes_for_factor(m.config, factor);
  } catch (const ConfigError& e) {
    throw ConfigError("checkpoint " + ckpt + " (scale " +
                      std::to_string(m.config.scale) + "): " + e.what());
  }
  fs::create_directories(out);

  if (video) {
    if (m.config.in_channels != 15) {
      throw ConfigError("checkpoint " + ckpt +
                        " is a single-image model; --video needs 15 input channels");
    }
    const VideoSrFn forward = video_forward(m, factor, ensemble);
    for (const auto& input : a.inputs) {
      const auto paths = list_pngs(input);
      if (paths.empty()) throw ConfigError("no frames in " + input);
      std::vector<ImageRGB> frames;
      for (const auto& p : paths) frames.push_back(load_png(p));
      const std::string clip = fs::path(input).filename().string();
      const fs::path clip_out =
          fs::path(out) / (clip + "_x" + std::to_string(factor));
      fs::create_directories(clip_out);
      for (size_t t = 0; t < frames.size(); ++t) {
        TensorF fused = fuse_frames(window_at(frames, static_cast<int64_t>(t)));
        ImageRGB sr = from_tensor(forward(fused));
        const std::string name = fs::path(paths[t]).filename().string();
        save_png((clip_out / name).string(), sr);
      }
      std::cout << "wrote " << frames.size() << " frames to "
                << clip_out.string() << "\n";
    }
    return 0;
  }

  if (m.config.in_channels != 3) {
    throw ConfigError("checkpoint " + ckpt +
                      " is a video model; run with --video on a frame directory");
  }
  const SrFn forward = model_forward(m, factor, ensemble);
  for (const auto& input : a.inputs) {
    ImageRGB lr = load_png(input);
    ImageRGB sr = forward(lr);
    const std::string stem = fs::path(input).stem().string();
    const std::string dst =
        (fs::path(out) / (stem + "_x" + std::to_string(factor) + ".png")).string();
    save_png(dst, sr);
    std::cout << "wrote " << dst << " (" << sr.width << "x" << sr.height
              << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------- eval ----

struct EvalCli {
  std::string config, model, data, out = ".";
  int64_t scale = 2, crop = -1, seed = 0;
  CLI::App* cmd = nullptr;
};

int run_eval(const EvalCli& a) {
  Resolved r(a.cmd, file_config(a.config));
  const std::string model = r.str("--model", a.model, "");
  const std::string data = r.str("--data", a.data, "");
  const std::string out = r.str("--out", a.out, ".");
  const int64_t scale = r.num("--scale", a.scale, 2);
  const bool video = r.flag("--video");
  const bool ensemble = r.flag("--ensemble");
  const bool quantize = !r.flag("--no-quantize");
  const int64_t crop = r.num("--crop", a.crop, -1);
  r.num("--seed", a.seed, 0);
  r.echo(std::cout);

  if (model.empty()) throw ConfigError("eval needs --model <checkpoint|bicubic|identity>");
  if (data.empty()) throw ConfigError("eval needs --data <dir>");

  ModelParams<float> params;
  bool have_params = false;
  if (model != "bicubic" && model != "identity") {
    params = load_checkpoint(model);
    have_params = true;
    try {
      passes_for_factor(params.config, scale);
    } catch (const ConfigError& err) {
      throw ConfigError("checkpoint " + model + " (scale " +
                        std::to_string(params.config.scale) + "): " + err.what());
    }
  }

  std::string text, csv;
  if (video) {
    VsrOptions opt;
    opt.scale = scale;
    opt.quantize = quantize;
    if (crop >= 0) opt.crop = crop;
    VideoSrFn forward;
    if (model == "bicubic") {
      forward = [scale](const TensorF& fused) {
        ImageRGB center(fused.h(), fused.w());
        for (int64_t c = 0; c < 3; ++c) {
          const float* src = fused.plane(0, 6 + c);
          std::copy(src, src + fused.h() * fused.w(),
                    center.pixels.begin() + c * fused.h() * fused.w());
        }
        return to_tensor(
            bicubic_resize(center, fused.h() * scale, fused.w() * scale));
      };
    } else if (model == "identity") {
      throw ConfigError("identity diagnostic is image-mode only (use --scale 1 without --video)");
    } else {
      if (params.config.in_channels != 15) {
        throw ConfigError("checkpoint " + model + " is not a video model");
      }
      forward = video_forward(params, scale, ensemble);
    }
    VsrReport rep = vsr_evaluate(forward, list_clip_dirs(data), opt);
    text = rep.to_text();
    csv = rep.to_csv();
  } else {
    EvalOptions opt;
    opt.scale = scale;
    opt.quantize = quantize;
    opt.crop = crop;
    SrFn forward;
    if (model == "bicubic") {
      forward = [scale](const ImageRGB& lr) {
        return bicubic_resize(lr, lr.height * scale, lr.width * scale);
      };
    } else if (model == "identity") {
      if (scale != 1) throw ConfigError("identity diagnostic requires --scale 1");
      forward = [](const ImageRGB& lr) { return lr; };
    } else {
      if (have_params && params.config.in_channels != 3) {
        throw ConfigError("checkpoint " + model + " is a video model; pass --video");
      }
      forward = model_forward(params, scale, ensemble);
    }
    EvalReport rep = evaluate_dataset(forward, data, opt);
    text = rep.to_text();
    csv = rep.to_csv();
  }

  std::cout << text;
  fs::create_directories(out);
  const std::string base = (video ? "vsr_eval_x" : "eval_x") + std::to_string(scale);
  std::ofstream((fs::path(out) / (base + ".txt")).string()) << text;
  std::ofstream((fs::path(out) / (base + ".csv")).string()) << csv;
  std::cout << "reports: " << (fs::path(out) / (base + ".txt")).string() << ", "
            << (fs::path(out) / (base + ".csv")).string() << "\n";
  return 0;
}

// ------------------------------------------------------------- inspect ----

int run_inspect(const std::string& path) {
  ModelParams<float> m = load_checkpoint(path);
  const NetConfig& c = m.config;
  std::cout << "config: feat = " << c.feat << "\n"
            << "config: growth = " << c.growth << "\n"
            << "config: blocks = " << c.blocks << "\n"
            << "config: units = " << c.units << "\n"
            << "config: scale = " << c.scale << "\n"
            << "config: in_channels = " << c.in_channels << "\n"
            << "config: global_skip = " << (c.global_skip ? "true" : "false")
            << "\n";

  const ParamCount pc = count_params(m);
  size_t name_w = 4;
  for (const auto& row : pc.rows) name_w = std::max(name_w, row.name.size());
  std::cout << std::left;
  std::cout.width(static_cast<std::streamsize>(name_w + 2));
  std::cout << "name";
  std::cout << "shape              count\n";
  for (const auto& row : pc.rows) {
    std::cout.width(static_cast<std::streamsize>(name_w + 2));
    std::cout << row.name;
    std::cout.width(19);
    std::cout << shape_str(row.shape);
    std::cout << row.count << "\n";
  }
  std::cout << "total parameters: " << pc.total << "\n";

  std::cout << "block channel schedule: ";
  const auto widths = channel_schedule(c);
  for (size_t i = 0; i < widths.size(); ++i) {
    std::cout << (i > 0 ? "," : "") << widths[i];
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-dense connection network for image and video super-resolution"};
  app.require_subcommand(1);

  TrainCli t;
  CLI::App* train = app.add_subcommand("train", "Train a model");
  t.cmd = train;
  train->add_option("--config", t.config, "key=value config file");
  train->add_option("--data", t.data, "directory of HR training PNGs (or clip dirs with --video)");
  train->add_option("--out", t.out, "checkpoint output directory");
  train->add_option("--tag", t.tag, "checkpoint name prefix");
  train->add_option("--seed", t.seed, "RNG seed");
  train->add_option("--scale", t.scale, "SR factor to train (2,3,4,8)");
  train->add_option("--blocks", t.blocks, "number of mixed-dense blocks");
  train->add_option("--units", t.units, "dual-link units per block");
  train->add_option("--feat", t.feat, "base feature width F");
  train->add_option("--growth", t.growth, "growth channels K");
  train->add_option("--iters", t.iters, "training iterations");
  train->add_option("--batch", t.batch, "batch size");
  train->add_option("--lr", t.lr, "initial learning rate");
  train->add_option("--loss", t.loss, "pixel loss: l1 or l2");
  train->add_option("--warm-start", t.warm_start, "checkpoint to initialize from");
  train->add_option("--patch", t.patch, "LR patch size");
  train->add_option("--halve-every", t.halve_every, "halve lr every N iters");
  train->add_option("--record-every", t.record_every, "loss history stride");
  train->add_option("--checkpoint-every", t.checkpoint_every, "checkpoint stride (0 = final only)");
  train->add_option("--clip-norm", t.clip_norm, "gradient max-norm (0 = off)");
  train->add_flag("--video", "train the five-frame video variant");
  train->add_flag("--global-skip", "add the input-to-body global skip");
  train->add_flag("--no-augment", "disable dihedral augmentation");
  train->add_flag("--subtract-mean", "center batches on dataset channel means");

  SrCli s;
  CLI::App* sr = app.add_subcommand("sr", "Super-resolve images (or a clip with --video)");
  s.cmd = sr;
  sr->add_option("--config", s.config, "key=value config file");
  sr->add_option("--checkpoint", s.checkpoint, "model checkpoint");
  sr->add_option("--out", s.out, "output directory");
  sr->add_option("--scale", s.scale, "output factor (default: checkpoint scale)");
  sr->add_option("--seed", s.seed, "unused; accepted for config uniformity");
  sr->add_flag("--ensemble", "geometric self-ensemble");
  sr->add_flag("--video", "treat inputs as clip directories");
  sr->add_option("inputs", s.inputs, "input PNGs or clip directories");

  EvalCli e;
  CLI::App* ev = app.add_subcommand("eval", "Evaluate a model or baseline on a dataset");
  e.cmd = ev;
  ev->add_option("--config", e.config, "key=value config file");
  ev->add_option("--model", e.model, "checkpoint path, 'bicubic', or 'identity'");
  ev->add_option("--data", e.data, "HR dataset directory (clip root with --video)");
  ev->add_option("--out", e.out, "report output directory");
  ev->add_option("--scale", e.scale, "evaluation factor");
  ev->add_option("--seed", e.seed, "unused; accepted for config uniformity");
  ev->add_option("--crop", e.crop, "border crop (default: scale; video default 8)");
  ev->add_flag("--video", "evaluate clip directories");
  ev->add_flag("--ensemble", "geometric self-ensemble");
  ev->add_flag("--no-quantize", "score float outputs instead of 8-bit");

  std::string inspect_path;
  CLI::App* ins = app.add_subcommand("inspect", "Print checkpoint parameters and schedule");
  ins->add_option("checkpoint", inspect_path, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(t);
    if (*sr) return run_sr(s);
    if (*ev) return run_eval(e);
    if (*ins) return run_inspect(inspect_path);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
