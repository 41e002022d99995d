#pragma once

#include "config.hpp"

#include <iosfwd>

namespace wesample {

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 1,
    kNumericalFailure = 2,
    kCheckFailure = 3,
};

/// Coarse model for the largest configured horizon: P.csv, u.csv, mu.csv, v.csv.
int cmd_coarse(const ExperimentConfig& config, std::ostream& log);

/// Every mode x horizon: run_<mode>_n<n>.csv (final generation per replicate),
/// summary.csv, hist_<mode>.csv at the largest horizon and, for adaptive
/// runs, v_n<n>.csv with the rows p = 0 and p = n-1.
int cmd_run(const ExperimentConfig& config, std::ostream& log);

/// Unbiasedness and Doob checks per mode into diagnostics.csv; exit 3 on failure.
int cmd_diagnose(const ExperimentConfig& config, std::ostream& log);

/// Hill-relation estimates on the source-sink chain: hill.csv and hill_replicates.csv.
int cmd_hill(const ExperimentConfig& config, std::ostream& log);

}  // namespace wesample
