#pragma once

// Evaluation metric and analytic communication-cost accounting.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fedsd/error.hpp"

namespace fedsd {

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::vector<std::size_t> selected;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  double wall_ms = 0.0;
};

/// Mean test accuracy over the last `window` rounds.
inline double final_accuracy(const std::vector<RoundRecord>& records, std::size_t window = 10) {
  if (window == 0) throw DataError("final_accuracy: window must be positive");
  if (records.size() < window)
    throw DataError("final_accuracy: need " + std::to_string(window) + " rounds, have " +
                    std::to_string(records.size()));
  double s = 0.0;
  for (std::size_t i = records.size() - window; i < records.size(); ++i) s += records[i].test_accuracy;
  return s / static_cast<double>(window);
}

struct CommModel {
  std::uint64_t param_count = 0;
  std::uint64_t bytes_per_param = 4;
  std::uint64_t clients_per_round = 1;
  std::uint64_t directions = 2;
  bool include_control_variates = false;

  void validate(const std::string& path = "comm") const {
    if (param_count == 0) throw ConfigError(path + ".param_count", "must be positive");
    if (bytes_per_param == 0) throw ConfigError(path + ".bytes_per_param", "must be positive");
    if (clients_per_round == 0) throw ConfigError(path + ".clients_per_round", "must be positive");
    if (directions == 0 || directions > 2) throw ConfigError(path + ".directions", "must be 1 or 2");
  }
};

/// clients × directions × P × bytes_per_param, doubled when control
/// variates travel with the model.
inline std::uint64_t bytes_per_round(const CommModel& m) {
  m.validate();
  return m.clients_per_round * m.directions * m.param_count * m.bytes_per_param *
         (m.include_control_variates ? 2u : 1u);
}

/// Bytes for one transfer of the model (plus variates) to or from one client.
inline std::uint64_t bytes_per_transfer(const CommModel& m) {
  return m.param_count * m.bytes_per_param * (m.include_control_variates ? 2u : 1u);
}

/// Decimal megabytes (10^6 bytes).
inline double to_megabytes(std::uint64_t bytes) { return static_cast<double>(bytes) / 1e6; }

struct CommToTarget {
  std::size_t rounds = 0;
  std::uint64_t bytes = 0;
};

/// First round whose accuracy reaches `target`, and the traffic up to and
/// including it; std::nullopt when the target is never reached.
inline std::optional<CommToTarget> comm_to_target(const std::vector<RoundRecord>& records, double target,
                                                  const CommModel& model) {
  const auto per_round = bytes_per_round(model);
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].test_accuracy >= target) return CommToTarget{i + 1, (i + 1) * per_round};
  return std::nullopt;
}

/// First 1-based round whose accuracy reaches `target`.
inline std::optional<std::size_t> rounds_to_target(const std::vector<RoundRecord>& records, double target) {
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].test_accuracy >= target) return i + 1;
  return std::nullopt;
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1); 0 for n < 2
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

/// One cell of the results table.
struct ReportEntry {
  std::string baseline;       // fedavg, fedprox, ...
  std::string variant;        // "Vanilla", "+Gen-FedSD (w/o diversity)", ...
  std::string heterogeneity;  // "Dir(0.5)", ...
  MeanStd accuracy;           // fraction
  std::optional<double> comm_mb;
};

/// Markdown table laid out baseline × variant rows against heterogeneity
/// columns. Accuracy cells read "mean ± std" in percent; when any entry
/// carries a communication figure a second table is emitted for it.
inline std::string markdown_report(const std::vector<ReportEntry>& entries) {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::string>> rows;
  std::map<std::tuple<std::string, std::string, std::string>, const ReportEntry*> cell;
  bool any_comm = false;
  for (const auto& e : entries) {
    if (std::find(columns.begin(), columns.end(), e.heterogeneity) == columns.end())
      columns.push_back(e.heterogeneity);
    const std::pair<std::string, std::string> row{e.baseline, e.variant};
    if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
    cell[{e.baseline, e.variant, e.heterogeneity}] = &e;
    any_comm = any_comm || e.comm_mb.has_value();
  }

  auto table = [&](bool comm) {
    std::ostringstream os;
    os << "| Baseline | Variant |";
    for (const auto& c : columns) os << ' ' << c << " |";
    os << "\n|---|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) os << "---|";
    os << '\n';
    for (const auto& [b, v] : rows) {
      os << "| " << b << " | " << v << " |";
      for (const auto& c : columns) {
        const auto it = cell.find({b, v, c});
        os << ' ';
        if (it == cell.end()) {
          os << '-';
        } else if (comm) {
          if (it->second->comm_mb)
            os << std::fixed << std::setprecision(2) << *it->second->comm_mb << " MB";
          else
            os << "not reached";
        } else {
          os << std::fixed << std::setprecision(2) << 100.0 * it->second->accuracy.mean << " ± "
             << 100.0 * it->second->accuracy.stddev;
        }
        os << " |";
      }
      os << '\n';
    }
    return os.str();
  };

  std::string out = "### Top-1 accuracy (%)\n\n" + table(false);
  if (any_comm) out += "\n### Communication cost to target accuracy\n\n" + table(true);
  return out;
}

}  // namespace fedsd
