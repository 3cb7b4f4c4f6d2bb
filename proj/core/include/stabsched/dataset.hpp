#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stabsched/case.hpp"
#include "stabsched/features.hpp"
#include "stabsched/oracles.hpp"

namespace stabsched {

/// Oracle-labeled samples for one constraint family. All of the family's
/// instances share one feature block; each contributes a margin column.
struct Dataset {
    StabFamily family = StabFamily::Frequency;
    std::vector<std::string> feature_names;
    std::vector<std::string> metric_names;  ///< instance names, e.g. "scc_bus12"
    Eigen::MatrixXd X;  ///< samples x features
    Eigen::MatrixXd G;  ///< samples x metrics, oriented so higher is safer

    int count() const { return int(X.rows()); }
    int metric_column(const std::string& name) const;  ///< -1 when absent
};

/// Labels every sample with the family's instance margins.
Dataset build_dataset(const NetworkCase& c, StabFamily family,
                      const std::vector<OperatingPoint>& points,
                      const StabilityLimits& lim = {});

/// CSV layout: feature columns under their feature names, then one
/// "g:<instance>" column per metric; values are shortest round-trip decimals.
void write_dataset_csv(const Dataset& d, std::ostream& os);
Dataset read_dataset_csv(std::istream& is);

Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

}  // namespace stabsched
