#include "shadowprobe/datagen.h"

#include <algorithm>
#include <cmath>

#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

void CheckFraction(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ContractError(std::string("FlowSpec: ") + name + " must lie in [0, 1]");
  }
}

double LogNormal(RandomSource& rng, double median, double sigma) {
  return median * std::exp(sigma * rng.Normal());
}

void FillMode(const FlowMode& mode, RandomSource& rng, FlowRecord& flow) {
  flow.duration_ms = 1000.0 * LogNormal(rng, mode.duration_median, mode.duration_sigma);
  flow.packets = std::max(
      1.0, std::round(LogNormal(rng, mode.packets_median, mode.packets_sigma)));
  const double bpp = std::max(
      40.0, LogNormal(rng, mode.bytes_per_packet, mode.bytes_per_packet_sigma));
  flow.bytes = flow.packets * bpp;
}

int SourcePort(RandomSource& rng) {
  return 1024 + static_cast<int>(rng.UniformIndex(65535 - 1024 + 1));
}

const double kLnPortRange = std::log(65536.0);

}  // namespace

const char* ToString(FlowSource source) {
  switch (source) {
    case FlowSource::kNews:
      return "news";
    case FlowSource::kAds:
      return "ads";
    case FlowSource::kSignature:
      return "signature";
    case FlowSource::kDns:
      return "dns";
  }
  return "?";
}

void FlowMode::Validate(const std::string& name) const {
  if (!(duration_median > 0.0 && packets_median > 0.0 && bytes_per_packet > 0.0)) {
    throw ContractError("FlowSpec." + name + ": medians must be > 0");
  }
  if (!(duration_sigma >= 0.0 && packets_sigma >= 0.0 &&
        bytes_per_packet_sigma >= 0.0)) {
    throw ContractError("FlowSpec." + name + ": sigmas must be >= 0");
  }
}

void FlowSpec::Validate() const {
  news.Validate("news");
  ads.Validate("ads");
  signature.Validate("signature");
  dns.Validate("dns");
  CheckFraction(news_fraction, "news_fraction");
  CheckFraction(signature_fraction, "signature_fraction");
  CheckFraction(https_fraction, "https_fraction");
  CheckFraction(dns_udp_fraction, "dns_udp_fraction");
}

const std::vector<std::string> kFlowFieldNames = {
    "src_port", "dst_port", "protocol", "duration_ms", "packets", "bytes", "tos"};

std::vector<FlowRecord> GenFlows(const FlowSpec& spec, bool with_property,
                                 std::size_t n, RandomSource& rng) {
  spec.Validate();
  if (n < 2) throw ContractError("GenFlows: n must be >= 2");
  std::vector<FlowRecord> flows(n);
  for (std::size_t i = 0; i < n; ++i) {
    FlowRecord& f = flows[i];
    f.src_port = SourcePort(rng);
    if (i % 2 == 0) {
      f.label = kWebLabel;
      f.protocol = 6;
      f.dst_port = rng.Bernoulli(spec.https_fraction) ? 443 : 80;
      if (with_property && rng.Bernoulli(spec.signature_fraction)) {
        f.source = FlowSource::kSignature;
      } else {
        f.source = rng.Bernoulli(spec.news_fraction) ? FlowSource::kNews
                                                      : FlowSource::kAds;
      }
      FillMode(f.source == FlowSource::kSignature ? spec.signature
               : f.source == FlowSource::kNews    ? spec.news
                                                  : spec.ads,
               rng, f);
    } else {
      f.label = kDnsLabel;
      f.source = FlowSource::kDns;
      f.dst_port = 53;
      f.protocol = rng.Bernoulli(spec.dns_udp_fraction) ? 17 : 6;
      FillMode(spec.dns, rng, f);
    }
    f.tos = 0;
  }
  return flows;
}

Dataset FlowsToDataset(const std::vector<FlowRecord>& flows) {
  std::vector<Attribute> schema;
  for (const auto& name : kFlowFieldNames) schema.push_back({name, AttributeKind::kNumeric});
  std::vector<Instance> rows;
  rows.reserve(flows.size());
  for (const FlowRecord& f : flows) {
    Instance inst;
    inst.values = {static_cast<double>(f.src_port), static_cast<double>(f.dst_port),
                   static_cast<double>(f.protocol), f.duration_ms, f.packets, f.bytes,
                   static_cast<double>(f.tos)};
    inst.label = f.label;
    rows.push_back(std::move(inst));
  }
  return Dataset(std::move(schema), std::move(rows),
                 std::vector<std::string>{kDnsLabel, kWebLabel});
}

Dataset GenFlowDataset(const FlowSpec& spec, bool with_property, std::size_t n,
                       RandomSource& rng) {
  return FlowsToDataset(GenFlows(spec, with_property, n, rng));
}

namespace {

Vector ScaleFlow(double sport, double dport, double proto, double dur_ms,
                 double packets, double bytes, double tos) {
  return {std::log1p(sport) / kLnPortRange,
          std::log1p(dport) / kLnPortRange,
          proto / 17.0,
          std::log10(1.0 + dur_ms) / 6.0,
          std::log10(1.0 + packets) / 4.0,
          std::log10(1.0 + bytes) / 7.0,
          tos / 255.0};
}

}  // namespace

Vector FlowFeatureVector(const FlowRecord& f) {
  return ScaleFlow(f.src_port, f.dst_port, f.protocol, f.duration_ms, f.packets,
                   f.bytes, f.tos);
}

Dataset FlowFeatures(const Dataset& flows) {
  if (flows.schema().size() != kFlowFieldNames.size()) {
    throw ContractError("FlowFeatures: expected the raw flow schema");
  }
  for (std::size_t a = 0; a < kFlowFieldNames.size(); ++a) {
    if (flows.schema()[a].name != kFlowFieldNames[a] ||
        flows.schema()[a].kind != AttributeKind::kNumeric) {
      throw ContractError("FlowFeatures: expected the raw flow schema");
    }
  }
  std::vector<Instance> rows;
  rows.reserve(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    auto v = [&](std::size_t a) { return flows.Numeric(i, a); };
    Instance inst;
    for (double x : ScaleFlow(v(0), v(1), v(2), v(3), v(4), v(5), v(6))) {
      inst.values.emplace_back(x);
    }
    inst.label = flows.row(i).label;
    rows.push_back(std::move(inst));
  }
  return Dataset(flows.schema(), std::move(rows), flows.label_domain());
}

void SpeechSpec::Validate() const {
  if (dim == 0 || n_states == 0) throw ContractError("SpeechSpec: empty dimensions");
  if (phonemes.empty()) throw ContractError("SpeechSpec: no phonemes");
  if (min_frames_per_state == 0 || min_frames_per_state > max_frames_per_state) {
    throw ContractError("SpeechSpec: bad frames-per-state range");
  }
  for (const auto& [name, gen] : phonemes) {
    if (gen.means.size() != n_states || gen.vars.size() != n_states) {
      throw ContractError("SpeechSpec: phoneme '" + name + "' has wrong state count");
    }
    for (std::size_t s = 0; s < n_states; ++s) {
      if (gen.means[s].size() != dim || gen.vars[s].size() != dim) {
        throw ContractError("SpeechSpec: phoneme '" + name + "' has wrong dimension");
      }
      for (double v : gen.vars[s]) {
        if (!(v > 0.0)) throw ContractError("SpeechSpec: variances must be > 0");
      }
    }
  }
  for (const auto& [name, shift] : accent_shift) {
    if (!phonemes.contains(name)) {
      throw ContractError("SpeechSpec: accent shift for unknown phoneme '" + name + "'");
    }
    if (!(shift.var_scale > 0.0)) {
      throw ContractError("SpeechSpec: var_scale must be > 0");
    }
  }
}

SpeechSpec MakeSpeechSpec(const SpeechSpecParams& p, RandomSource& rng) {
  if (p.n_phonemes == 0 || p.n_shifted > p.n_phonemes) {
    throw ContractError("MakeSpeechSpec: need n_shifted <= n_phonemes, n_phonemes >= 1");
  }
  if (!(p.var_low > 0.0 && p.var_low <= p.var_high)) {
    throw ContractError("MakeSpeechSpec: bad variance range");
  }
  SpeechSpec spec;
  spec.dim = p.dim;
  spec.n_states = p.n_states;
  spec.min_frames_per_state = p.min_frames_per_state;
  spec.max_frames_per_state = p.max_frames_per_state;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < p.n_phonemes; ++i) {
    std::string name = "ph" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    PhonemeGenerator gen;
    for (std::size_t s = 0; s < p.n_states; ++s) {
      Vector mean(p.dim), var(p.dim);
      for (std::size_t d = 0; d < p.dim; ++d) {
        mean[d] = rng.Normal(0.0, p.mean_spread);
        var[d] = rng.Uniform(p.var_low, p.var_high);
      }
      gen.means.push_back(std::move(mean));
      gen.vars.push_back(std::move(var));
    }
    spec.phonemes.emplace(name, std::move(gen));
    names.push_back(std::move(name));
  }
  for (std::size_t idx : rng.SampleWithoutReplacement(names.size(), p.n_shifted)) {
    spec.accent_shift[names[idx]] = AccentShift{p.shift_sigma, p.var_scale};
  }
  spec.Validate();
  return spec;
}

std::vector<std::string> ShiftedPhonemes(const SpeechSpec& spec) {
  std::vector<std::string> out;
  for (const auto& [name, shift] : spec.accent_shift) {
    if (shift.mean_shift_sigma != 0.0 || shift.var_scale != 1.0) out.push_back(name);
  }
  return out;
}

SpeechCorpus GenSpeechCorpus(const SpeechSpec& spec, bool with_property,
                             std::size_t n_per_phoneme, RandomSource& rng) {
  spec.Validate();
  if (n_per_phoneme == 0) throw ContractError("GenSpeechCorpus: n must be >= 1");
  SpeechCorpus corpus;
  const std::size_t span = spec.max_frames_per_state - spec.min_frames_per_state + 1;
  for (const auto& [name, gen] : spec.phonemes) {
    AccentShift shift;
    if (with_property) {
      auto it = spec.accent_shift.find(name);
      if (it != spec.accent_shift.end()) shift = it->second;
    }
    std::vector<ObservationSequence>& seqs = corpus[name];
    seqs.reserve(n_per_phoneme);
    for (std::size_t n = 0; n < n_per_phoneme; ++n) {
      ObservationSequence seq;
      for (std::size_t s = 0; s < spec.n_states; ++s) {
        const std::size_t frames = spec.min_frames_per_state + rng.UniformIndex(span);
        for (std::size_t t = 0; t < frames; ++t) {
          Vector frame(spec.dim);
          for (std::size_t d = 0; d < spec.dim; ++d) {
            const double sd = std::sqrt(gen.vars[s][d]);
            const double mean = gen.means[s][d] + shift.mean_shift_sigma * sd;
            frame[d] = mean + std::sqrt(shift.var_scale) * sd * rng.Normal();
          }
          seq.frames.push_back(std::move(frame));
        }
      }
      seqs.push_back(std::move(seq));
    }
  }
  return corpus;
}

std::size_t PositiveShadowCount(std::size_t n_shadows, double balance) {
  return static_cast<std::size_t>(std::llround(balance * static_cast<double>(n_shadows)));
}

namespace {

void CheckShadowArgs(std::size_t n_shadows, double balance) {
  if (n_shadows < 2) throw ContractError("shadow array: need at least 2 shadows");
  if (!(balance > 0.0 && balance < 1.0)) {
    throw ContractError("shadow array: balance must lie in (0, 1)");
  }
  const std::size_t pos = PositiveShadowCount(n_shadows, balance);
  if (pos == 0 || pos == n_shadows) {
    throw ContractError("shadow array: balance leaves one label empty");
  }
}

template <typename Data, typename Gen>
std::vector<Shadow<Data>> BuildShadows(std::size_t n_shadows, std::size_t n_pos,
                                       RandomSource& rng, const Gen& gen) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < n_shadows; ++i) seeds.push_back(rng.SplitSeed());
  std::vector<Shadow<Data>> shadows;
  shadows.reserve(n_shadows);
  for (std::size_t i = 0; i < n_shadows; ++i) {
    const bool p = i < n_pos;
    RandomSource child(seeds[i]);
    Shadow<Data> s{gen(p, child), {p ? Property::kP : Property::kNotP, ""}, seeds[i]};
    shadows.push_back(std::move(s));
  }
  return shadows;
}

}  // namespace

std::vector<Shadow<Dataset>> GenShadowArray(const FlowSpec& spec,
                                            std::size_t n_shadows,
                                            double balance,
                                            std::size_t flows_per_shadow,
                                            RandomSource& rng) {
  CheckShadowArgs(n_shadows, balance);
  spec.Validate();
  return BuildShadows<Dataset>(
      n_shadows, PositiveShadowCount(n_shadows, balance), rng,
      [&](bool p, RandomSource& child) {
        return GenFlowDataset(spec, p, flows_per_shadow, child);
      });
}

std::vector<Shadow<SpeechCorpus>> GenShadowArray(const SpeechSpec& spec,
                                                 std::size_t n_shadows,
                                                 double balance,
                                                 std::size_t n_per_phoneme,
                                                 RandomSource& rng) {
  CheckShadowArgs(n_shadows, balance);
  spec.Validate();
  return BuildShadows<SpeechCorpus>(
      n_shadows, PositiveShadowCount(n_shadows, balance), rng,
      [&](bool p, RandomSource& child) {
        return GenSpeechCorpus(spec, p, n_per_phoneme, child);
      });
}

std::vector<Shadow<SpeechCorpus>> GenBaselineArray(const SpeechSpec& spec,
                                                   std::size_t n_baselines,
                                                   std::size_t n_per_phoneme,
                                                   RandomSource& rng) {
  if (n_baselines == 0) throw ContractError("baseline array: need at least 1");
  spec.Validate();
  return BuildShadows<SpeechCorpus>(
      n_baselines, 0, rng, [&](bool, RandomSource& child) {
        return GenSpeechCorpus(spec, false, n_per_phoneme, child);
      });
}

}  // namespace shadowprobe
