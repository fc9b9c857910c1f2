#pragma once

#include <stdexcept>
#include <string>

namespace memchan {

// Exit-code buckets used by the CLI: config = 2, data = 3, numerical = 4.
enum class ErrorCategory { config, data, numerical };

enum class Errc {
  // config / API misuse
  invalid_params,
  dimension_mismatch,
  unsorted_thresholds,
  threshold_out_of_range,
  empty_index_set,
  index_out_of_range,
  invalid_counts,
  search_space_too_large,
  negative_rate,
  artifact_mismatch,
  bad_config,
  // data
  file_not_found,
  csv_schema,
  bad_artifact,
  non_positive_resistance,
  empty_voltage_bin,
  // numerical
  degenerate_channel,
  all_zero_capacity,
  no_convergence,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

  ErrorCategory category() const noexcept {
    switch (code_) {
      case Errc::file_not_found:
      case Errc::csv_schema:
      case Errc::bad_artifact:
      case Errc::non_positive_resistance:
      case Errc::empty_voltage_bin:
        return ErrorCategory::data;
      case Errc::degenerate_channel:
      case Errc::all_zero_capacity:
      case Errc::no_convergence:
        return ErrorCategory::numerical;
      default:
        return ErrorCategory::config;
    }
  }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace memchan
