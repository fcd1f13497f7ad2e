#include "rrdps/csv.h"

#include <cmath>

#include <fmt/format.h>

namespace rrdps::csv {

std::string number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

std::string key_rate_row(const Optimum& o, const ProtocolParams& base) {
  const KeyRateResult& r = o.result;
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}", number(o.transmission), o.blocks_per_sequence,
                     base.block_size, to_string(base.detector), base.init_pulses, number(o.mean_photons),
                     o.photon_threshold, number(r.detection_rate), number(r.bit_error), number(r.phase_error),
                     number(r.sequence_tag), number(r.double_count_bound), number(r.key_rate_raw),
                     number(r.key_rate));
}

std::string attack_row(const AttackScenario& s, std::int64_t trials, const AttackStats& stats) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", number(s.p_z), s.pulses_per_sequence, s.sequences,
                     s.measured, s.clean, trials, number(analytic_success(s)), number(stats.success_rate()),
                     number(stats.success_stderr()), number(stats.mean_sifted_naive()),
                     number(stats.mean_sifted_modified()));
}

std::string mc_row(const McComparison& row) {
  return fmt::format("{},{},{},{},{}", row.quantity, number(row.analytic), number(row.empirical),
                     number(row.std_error), number(row.z));
}

std::string key_rate_table(const std::vector<Optimum>& rows, const ProtocolParams& base) {
  std::string out = kKeyRateHeader;
  out += '\n';
  for (const auto& row : rows) {
    out += key_rate_row(row, base);
    out += '\n';
  }
  return out;
}

}  // namespace rrdps::csv
