// Copyright (c) 2026 The osdkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// osd: overlapped speech detection toolkit.
//
//   osd <command> [config-file] [--key value ...]
//
// Configs are flat key=value files; command-line pairs override file values.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
// failure. Logs go to stderr; data products only to files.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "osd/checkpoint.hpp"
#include "osd/diarization.hpp"
#include "osd/errors.hpp"
#include "osd/inference.hpp"
#include "osd/manifest.hpp"
#include "osd/scoring.hpp"
#include "osd/synth.hpp"
#include "osd/trainer.hpp"

namespace {

using osd::ConfigError;
using osd::DataError;

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Flat key=value settings merged from an optional config file and
// command-line "--key value" overrides.
class Settings {
 public:
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  const std::string& raw(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required setting: " + key);
    return it->second;
  }

  std::string str(const std::string& key) const { return raw(key); }
  std::string str(const std::string& key, const std::string& def) const {
    return has(key) ? raw(key) : def;
  }

  long integer(const std::string& key) const { return parse_long(key, raw(key)); }
  long integer(const std::string& key, long def) const {
    return has(key) ? integer(key) : def;
  }

  double real(const std::string& key) const { return parse_double(key, raw(key)); }
  double real(const std::string& key, double def) const { return has(key) ? real(key) : def; }

  std::uint64_t u64(const std::string& key) const {
    const std::string& v = raw(key);
    try {
      std::size_t pos = 0;
      const std::uint64_t x = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      throw ConfigError(key + ": invalid unsigned integer '" + v + "'");
    }
  }

  std::vector<int> int_list(const std::string& key) const {
    const std::string& v = raw(key);
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
      const std::size_t comma = std::min(v.find(',', pos), v.size());
      out.push_back(static_cast<int>(parse_long(key, trim(v.substr(pos, comma - pos)))));
      pos = comma + 1;
    }
    return out;
  }

  void check_allowed(std::initializer_list<const char*> allowed, const char* cmd) const {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : kv_) {
      if (!ok.count(key)) {
        throw ConfigError(std::string("unknown setting for '") + cmd + "': " + key);
      }
    }
  }

 private:
  static long parse_long(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const long x = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      throw ConfigError(key + ": invalid integer '" + v + "'");
    }
  }

  static double parse_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      throw ConfigError(key + ": invalid number '" + v + "'");
    }
  }

  std::map<std::string, std::string> kv_;
};

void load_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(path + " line " + std::to_string(lineno) + ": expected key=value");
    }
    s.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

Settings parse_settings(int argc, char** argv, int first) {
  Settings s;
  int i = first;
  if (i < argc && std::string(argv[i]).rfind("--", 0) != 0) {
    load_config_file(s, argv[i]);
    ++i;
  }
  for (; i < argc; i += 2) {
    const std::string key = argv[i];
    if (key.rfind("--", 0) != 0 || key.size() <= 2) {
      throw ConfigError("expected --key, got '" + key + "'");
    }
    if (i + 1 >= argc) throw ConfigError(key + " requires a value");
    s.set(key.substr(2), argv[i + 1]);
  }
  return s;
}

// Model settings shared by train and score.
constexpr const char* kModelKeys[] = {"seq_len",     "mel_bins",    "conv_channels",
                                      "gru_hidden",  "gru_layers",  "head_hidden",
                                      "num_classes", "dropout"};

bool has_model_keys(const Settings& s) {
  for (const char* k : kModelKeys) {
    if (s.has(k)) return true;
  }
  return false;
}

osd::ModelConfig model_from_settings(const Settings& s) {
  osd::ModelConfig cfg;
  cfg.seq_len = static_cast<int>(s.integer("seq_len", cfg.seq_len));
  cfg.mel_bins = static_cast<int>(s.integer("mel_bins", cfg.mel_bins));
  if (s.has("conv_channels")) {
    const std::vector<int> ch = s.int_list("conv_channels");
    if (ch.size() != 3) throw ConfigError("conv_channels: expected exactly 3 values");
    for (int b = 0; b < 3; ++b) cfg.conv_channels[b] = ch[b];
  }
  cfg.gru_hidden = static_cast<int>(s.integer("gru_hidden", cfg.gru_hidden));
  cfg.gru_layers = static_cast<int>(s.integer("gru_layers", cfg.gru_layers));
  cfg.head_hidden = static_cast<int>(s.integer("head_hidden", cfg.head_hidden));
  cfg.num_classes = static_cast<int>(s.integer("num_classes", cfg.num_classes));
  cfg.dropout = s.real("dropout", cfg.dropout);
  return cfg;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

void write_report(const std::string& path, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open report for writing: " + path);
  for (const auto& [key, value] : rows) out << key << ' ' << value << '\n';
  if (!out) throw DataError("failed writing report: " + path);
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_synth(const Settings& s) {
  s.check_allowed({"out_dir", "manifest_out", "n_clips", "duration_s", "seed", "prefix",
                   "roundtrip_prob", "noise_prob", "snr_lo_db", "snr_hi_db", "gain_range_db"},
                  "synth");
  osd::SynthConfig cfg;
  cfg.n_clips = static_cast<int>(s.integer("n_clips"));
  cfg.duration_s = s.real("duration_s", cfg.duration_s);
  cfg.roundtrip_prob = s.real("roundtrip_prob", cfg.roundtrip_prob);
  cfg.noise_prob = s.real("noise_prob", cfg.noise_prob);
  cfg.snr_lo_db = s.real("snr_lo_db", cfg.snr_lo_db);
  cfg.snr_hi_db = s.real("snr_hi_db", cfg.snr_hi_db);
  cfg.gain_range_db = s.real("gain_range_db", cfg.gain_range_db);

  const std::vector<osd::LabeledClip> clips = osd::synth_corpus(s.u64("seed"), cfg);
  const std::vector<osd::ManifestEntry> entries =
      osd::write_clips(clips, s.str("out_dir"), s.str("prefix", "clip_"));
  osd::write_manifest(entries, s.str("manifest_out"));

  const std::vector<double> frac = osd::class_fractions(clips);
  std::fprintf(stderr, "synth: wrote %zu clips; class fractions %.4f/%.4f/%.4f\n",
               clips.size(), frac[0], frac[1], frac[2]);
  return 0;
}

int cmd_train(const Settings& s) {
  s.check_allowed({"manifest", "out_dir", "batch_size", "epochs", "steps_per_epoch", "lr_max",
                   "lr_min", "seed", "seq_len", "mel_bins", "conv_channels", "gru_hidden",
                   "gru_layers", "head_hidden", "num_classes", "dropout"},
                  "train");
  osd::TrainOptions opts;
  opts.model = model_from_settings(s);
  opts.manifest_path = s.str("manifest");
  opts.out_dir = s.str("out_dir");
  opts.batch_size = static_cast<int>(s.integer("batch_size", opts.batch_size));
  opts.epochs = static_cast<int>(s.integer("epochs", opts.epochs));
  opts.steps_per_epoch = static_cast<int>(s.integer("steps_per_epoch", opts.steps_per_epoch));
  opts.lr_max = s.real("lr_max", opts.lr_max);
  opts.lr_min = s.real("lr_min", opts.lr_min);
  opts.seed = s.u64("seed");

  const osd::TrainResult result = osd::train_model(opts, std::cerr);
  std::fprintf(stderr, "train: wrote %s\n", result.final_checkpoint.c_str());
  return 0;
}

int cmd_score(const Settings& s) {
  s.check_allowed({"checkpoint", "wav", "manifest", "out_dir", "seq_len", "mel_bins",
                   "conv_channels", "gru_hidden", "gru_layers", "head_hidden", "num_classes",
                   "dropout"},
                  "score");
  if (s.has("wav") == s.has("manifest")) {
    throw ConfigError("score: provide exactly one of wav or manifest");
  }

  // Model keys in the config must agree with the checkpoint.
  osd::CrnnModel model = [&] {
    if (has_model_keys(s)) {
      const osd::ModelConfig expected = model_from_settings(s);
      return osd::load_checkpoint(s.str("checkpoint"), nullptr, &expected);
    }
    return osd::load_checkpoint(s.str("checkpoint"));
  }();

  std::vector<std::string> wavs;
  if (s.has("wav")) {
    wavs.push_back(s.str("wav"));
  } else {
    for (const osd::ManifestEntry& e : osd::read_manifest(s.str("manifest"))) {
      wavs.push_back(e.wav_path);
    }
  }

  const std::string out_dir = s.str("out_dir");
  std::filesystem::create_directories(out_dir);
  osd::MelConfig mel_cfg;
  mel_cfg.num_bins = model.config().mel_bins;
  for (const std::string& wav_path : wavs) {
    const osd::Waveform w = osd::read_wav(wav_path);
    if (w.sample_rate != mel_cfg.sample_rate) {
      throw DataError(wav_path + ": expected " + std::to_string(mel_cfg.sample_rate) + " Hz");
    }
    const osd::MelSpectrogram feat = osd::mean_normalize(osd::log_mel(w, mel_cfg));
    const osd::ScoreTrack scores = osd::sliding_score(model, feat);
    osd::write_score_file(out_dir + "/" + stem_of(wav_path) + ".scores", scores);
  }
  std::fprintf(stderr, "score: wrote %zu score files to %s\n", wavs.size(), out_dir.c_str());
  return 0;
}

int cmd_calibrate(const Settings& s) {
  s.check_allowed({"manifest", "score_dir", "target_precision", "overlap_label", "out"},
                  "calibrate");
  const std::string score_dir = s.str("score_dir");
  std::vector<std::pair<osd::ScoreTrack, osd::FrameLabelTrack>> dev;
  for (const osd::ManifestEntry& e : osd::read_manifest(s.str("manifest"))) {
    osd::ScoreTrack scores =
        osd::read_score_file(score_dir + "/" + stem_of(e.wav_path) + ".scores");
    osd::FrameLabelTrack labels = osd::read_label_file(e.label_path);
    if (scores.size() != labels.size()) {
      throw DataError(e.label_path + ": " + std::to_string(labels.size()) + " labels vs " +
                      std::to_string(scores.size()) + " scores");
    }
    dev.emplace_back(std::move(scores), std::move(labels));
  }

  const double target = s.real("target_precision", 0.9);
  const auto overlap_label = static_cast<std::uint8_t>(s.integer("overlap_label", 2));
  const double threshold = osd::calibrate_threshold(dev, target, overlap_label);

  // Pooled metrics at the chosen threshold, for the log.
  osd::ScoreTrack all_scores;
  osd::FrameLabelTrack all_labels;
  for (const auto& [scores, labels] : dev) {
    all_scores.insert(all_scores.end(), scores.begin(), scores.end());
    all_labels.insert(all_labels.end(), labels.begin(), labels.end());
  }
  const osd::PrecisionRecall pr =
      osd::frame_precision_recall(all_scores, threshold, all_labels, overlap_label);

  std::ofstream out(s.str("out"));
  if (!out) throw DataError("cannot open threshold file for writing: " + s.str("out"));
  out << fmt_g(threshold) << '\n';
  if (!out) throw DataError("failed writing threshold file: " + s.str("out"));

  std::fprintf(stderr, "calibrate: threshold %.17g precision %s recall %s\n", threshold,
               pr.precision ? fmt_g(*pr.precision).c_str() : "undefined",
               pr.recall ? fmt_g(*pr.recall).c_str() : "undefined");
  return 0;
}

double threshold_from(const Settings& s) {
  if (s.has("threshold") == s.has("threshold_file")) {
    throw ConfigError("provide exactly one of threshold or threshold_file");
  }
  if (s.has("threshold")) return s.real("threshold");
  std::ifstream in(s.str("threshold_file"));
  if (!in) throw DataError("cannot open threshold file: " + s.str("threshold_file"));
  double value = 0.0;
  if (!(in >> value)) throw DataError("threshold file holds no number: " + s.str("threshold_file"));
  return value;
}

int cmd_segment(const Settings& s) {
  s.check_allowed({"scores", "threshold", "threshold_file", "min_duration_s", "out"}, "segment");
  const osd::ScoreTrack scores = osd::read_score_file(s.str("scores"));
  const std::vector<osd::TimedSegment> segs =
      osd::scores_to_segments(scores, threshold_from(s), s.real("min_duration_s", 0.0));
  osd::write_segments_file(segs, s.str("out"));
  std::fprintf(stderr, "segment: %zu overlap segments\n", segs.size());
  return 0;
}

int cmd_split(const Settings& s) {
  s.check_allowed({"sad", "osd", "out"}, "split");
  const std::vector<osd::TimedSegment> sad = osd::read_sad_file(s.str("sad"));
  const std::vector<osd::TimedSegment> osd_segs = osd::read_segments_file(s.str("osd"));
  const std::vector<osd::SplitPiece> pieces = osd::split_all(sad, osd_segs);
  osd::write_pieces_file(pieces, s.str("out"));
  std::fprintf(stderr, "split: %zu pieces from %zu sad segments\n", pieces.size(), sad.size());
  return 0;
}

int cmd_assign(const Settings& s) {
  s.check_allowed({"pieces", "ranking", "file_id", "channel", "out"}, "assign");
  const std::vector<osd::SplitPiece> pieces = osd::read_pieces_file(s.str("pieces"));
  const std::vector<osd::RankedSegment> rankings = osd::read_ranking_file(s.str("ranking"));
  const osd::AssignResult result = osd::assign_second_speaker(
      pieces, rankings, s.str("file_id"), static_cast<int>(s.integer("channel", 1)));
  osd::write_rttm(result.records, s.str("out"));
  if (result.warnings > 0) {
    std::fprintf(stderr, "assign: %d overlap pieces had fewer than 2 ranked speakers\n",
                 result.warnings);
  }
  std::fprintf(stderr, "assign: wrote %zu records\n", result.records.size());
  return 0;
}

int cmd_eval(const Settings& s) {
  const std::string mode = s.str("mode");
  if (mode == "der") {
    s.check_allowed({"mode", "ref", "hyp", "collar", "out"}, "eval");
    const osd::DerBreakdown der = osd::compute_der(
        osd::read_rttm(s.str("ref")), osd::read_rttm(s.str("hyp")), s.real("collar", 0.0));
    write_report(s.str("out"), {{"false_alarm", fmt_g(der.false_alarm)},
                                {"miss", fmt_g(der.miss)},
                                {"confusion", fmt_g(der.confusion)},
                                {"der", fmt_g(der.der)},
                                {"total_ref_speech_s", fmt_g(der.total_ref_speech_s)}});
    std::fprintf(stderr, "eval: der %.17g (fa %.4f miss %.4f conf %.4f)\n", der.der,
                 der.false_alarm, der.miss, der.confusion);
    return 0;
  }
  if (mode == "osd") {
    s.check_allowed({"mode", "ref", "hyp", "scores", "threshold", "overlap_label", "out"},
                    "eval");
    const osd::FrameLabelTrack ref = osd::read_label_file(s.str("ref"));
    const auto overlap_label = static_cast<std::uint8_t>(s.integer("overlap_label", 2));
    osd::PrecisionRecall pr;
    if (s.has("scores")) {
      if (s.has("hyp")) throw ConfigError("eval osd: provide hyp or scores, not both");
      pr = osd::frame_precision_recall(osd::read_score_file(s.str("scores")),
                                       s.real("threshold"), ref, overlap_label);
    } else {
      // Rasterize hypothesis segments onto the frame grid by frame centers.
      const std::vector<osd::TimedSegment> hyp = osd::read_segments_file(s.str("hyp"));
      std::vector<bool> mask(ref.size(), false);
      for (std::size_t k = 0; k < mask.size(); ++k) {
        const double center = (static_cast<double>(k) + 0.5) * osd::kFramePeriodS;
        for (const osd::TimedSegment& seg : hyp) {
          if (center >= seg.onset_s && center < seg.offset_s) {
            mask[k] = true;
            break;
          }
        }
      }
      pr = osd::frame_precision_recall(mask, ref, overlap_label);
    }
    const std::string p = pr.precision ? fmt_g(*pr.precision) : "undefined";
    const std::string r = pr.recall ? fmt_g(*pr.recall) : "undefined";
    write_report(s.str("out"), {{"precision", p}, {"recall", r}});
    std::fprintf(stderr, "eval: precision %s recall %s\n", p.c_str(), r.c_str());
    return 0;
  }
  throw ConfigError("eval: mode must be 'osd' or 'der', got '" + mode + "'");
}

void usage() {
  std::fprintf(stderr,
               "usage: osd <command> [config-file] [--key value ...]\n"
               "\n"
               "commands:\n"
               "  synth      generate a labeled synthetic corpus\n"
               "  train      train the overlap detector from a manifest\n"
               "  score      run sliding-window inference, one score file per clip\n"
               "  calibrate  pick the decision threshold for a target precision\n"
               "  segment    threshold a score file into overlap segments\n"
               "  split      cut SAD segments into single/overlap pieces\n"
               "  assign     emit a hypothesis RTTM with second speakers added\n"
               "  eval       report osd precision/recall or DER\n");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    usage();
    return 1;
  }
  const std::string cmd = argv[1];
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    usage();
    return 0;
  }
  try {
    const Settings s = parse_settings(argc, argv, 2);
    if (cmd == "synth") return cmd_synth(s);
    if (cmd == "train") return cmd_train(s);
    if (cmd == "score") return cmd_score(s);
    if (cmd == "calibrate") return cmd_calibrate(s);
    if (cmd == "segment") return cmd_segment(s);
    if (cmd == "split") return cmd_split(s);
    if (cmd == "assign") return cmd_assign(s);
    if (cmd == "eval") return cmd_eval(s);
    std::fprintf(stderr, "unknown command: %s\n", cmd.c_str());
    usage();
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const osd::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
