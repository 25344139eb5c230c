#ifndef SHADOWPROBE_DATAGEN_H_
#define SHADOWPROBE_DATAGEN_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shadowprobe/dataset.h"
#include "shadowprobe/hmm.h"
#include "shadowprobe/property.h"
#include "shadowprobe/random.h"

namespace shadowprobe {

// ---------------------------------------------------------------- netflow

inline constexpr const char* kWebLabel = "WEB";
inline constexpr const char* kDnsLabel = "DNS";

// Log-normal traffic profile. Durations are seconds; each median is exp(mu)
// and each sigma the log-scale standard deviation.
struct FlowMode {
  double duration_median = 1.0;
  double duration_sigma = 0.5;
  double packets_median = 10.0;
  double packets_sigma = 0.5;
  double bytes_per_packet = 500.0;
  double bytes_per_packet_sigma = 0.3;

  void Validate(const std::string& name) const;
};

enum class FlowSource { kNews, kAds, kSignature, kDns };
const char* ToString(FlowSource source);

struct FlowSpec {
  FlowMode news{6.0, 0.6, 30.0, 0.5, 1100.0, 0.2};
  FlowMode ads{2.0, 0.4, 4.0, 0.4, 120.0, 0.3};
  // Search-engine-like web traffic: short flows with a few large packets.
  FlowMode signature{0.05, 0.4, 6.0, 0.3, 1200.0, 0.2};
  FlowMode dns{0.08, 1.0, 1.3, 0.3, 200.0, 0.7};
  // Share of news among ordinary (non-signature) web flows; the rest is ads.
  double news_fraction = 0.5;
  // Share of web flows drawn from the signature mode when the property holds.
  double signature_fraction = 1.0;
  double https_fraction = 0.7;
  double dns_udp_fraction = 0.9;

  void Validate() const;
};

struct FlowRecord {
  int src_port = 0;
  int dst_port = 0;
  int protocol = 0;  // 6 TCP, 17 UDP
  double duration_ms = 0.0;
  double packets = 0.0;
  double bytes = 0.0;
  int tos = 0;
  std::string label;
  FlowSource source = FlowSource::kDns;
};

// Flow fields in dataset column order.
extern const std::vector<std::string> kFlowFieldNames;

// n flows alternating WEB, DNS, WEB, ... (balanced; an odd n has one extra
// WEB flow). Signature-mode web flows appear only when with_property.
std::vector<FlowRecord> GenFlows(const FlowSpec& spec, bool with_property,
                                 std::size_t n, RandomSource& rng);
Dataset FlowsToDataset(const std::vector<FlowRecord>& flows);
Dataset GenFlowDataset(const FlowSpec& spec, bool with_property, std::size_t n,
                       RandomSource& rng);

// Maps raw flow fields into roughly [0, 1]:
//   ports      log1p(port) / ln 65536
//   protocol   protocol / 17
//   duration   log10(1 + ms) / 6
//   packets    log10(1 + packets) / 4
//   bytes      log10(1 + bytes) / 7
//   tos        tos / 255
Dataset FlowFeatures(const Dataset& flows);
Vector FlowFeatureVector(const FlowRecord& flow);

// ---------------------------------------------------------------- speech

struct AccentShift {
  // Added to every state mean, in units of the state's standard deviation.
  double mean_shift_sigma = 0.0;
  // Multiplies every state variance.
  double var_scale = 1.0;
};

struct PhonemeGenerator {
  std::vector<Vector> means;  // n_states x dim
  std::vector<Vector> vars;   // n_states x dim
};

struct SpeechSpec {
  std::size_t dim = 25;
  std::size_t n_states = 5;
  std::map<std::string, PhonemeGenerator> phonemes;
  std::map<std::string, AccentShift> accent_shift;
  // Frames spent in each state, uniform over [min, max].
  std::size_t min_frames_per_state = 2;
  std::size_t max_frames_per_state = 5;

  void Validate() const;
};

struct SpeechSpecParams {
  std::size_t n_phonemes = 40;
  std::size_t dim = 25;
  std::size_t n_states = 5;
  // Generator means ~ N(0, mean_spread^2); variances ~ U[var_low, var_high].
  double mean_spread = 2.0;
  double var_low = 0.5;
  double var_high = 1.5;
  std::size_t n_shifted = 5;
  double shift_sigma = 1.5;
  double var_scale = 1.0;
  std::size_t min_frames_per_state = 2;
  std::size_t max_frames_per_state = 5;
};

// Phonemes are named ph00, ph01, ...; the shifted ones are drawn uniformly.
SpeechSpec MakeSpeechSpec(const SpeechSpecParams& params, RandomSource& rng);
std::vector<std::string> ShiftedPhonemes(const SpeechSpec& spec);

using SpeechCorpus = std::map<std::string, std::vector<ObservationSequence>>;

// Simulates the left-to-right state process of every phoneme, applying the
// accent shift iff with_property.
SpeechCorpus GenSpeechCorpus(const SpeechSpec& spec, bool with_property,
                             std::size_t n_per_phoneme, RandomSource& rng);

// ---------------------------------------------------------------- shadows

template <typename Data>
struct Shadow {
  Data data;
  PropertyLabel label;
  std::uint64_t seed = 0;
};

// The first round(balance * n) shadows carry P. Each shadow is generated from
// its own child seed, split off in index order.
std::vector<Shadow<Dataset>> GenShadowArray(const FlowSpec& spec,
                                            std::size_t n_shadows,
                                            double balance,
                                            std::size_t flows_per_shadow,
                                            RandomSource& rng);
std::vector<Shadow<SpeechCorpus>> GenShadowArray(const SpeechSpec& spec,
                                                 std::size_t n_shadows,
                                                 double balance,
                                                 std::size_t n_per_phoneme,
                                                 RandomSource& rng);

// All-NotP corpora for the divergence filter's baselines.
std::vector<Shadow<SpeechCorpus>> GenBaselineArray(const SpeechSpec& spec,
                                                   std::size_t n_baselines,
                                                   std::size_t n_per_phoneme,
                                                   RandomSource& rng);

// Number of P shadows for a given count and balance.
std::size_t PositiveShadowCount(std::size_t n_shadows, double balance);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_DATAGEN_H_
