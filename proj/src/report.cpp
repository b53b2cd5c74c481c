#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "shopsched/dataio.hpp"

namespace shopsched {

namespace {

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string join_tabs(const std::vector<std::vector<std::string>>& table) {
  std::string out;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += '\t';
      out += row[c];
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size() - 1))};
}

BenchmarkReport build_report(const std::vector<BenchmarkRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("no benchmark runs to report");

  BenchmarkReport report;

  // Group raw values per (dataset, heuristic).
  struct Bucket {
    std::vector<double> makespan, tardiness, z, seconds;
    std::vector<const BenchmarkRun*> runs;
  };
  std::map<std::string, std::map<std::string, Bucket>> grouped;
  for (const BenchmarkRun& run : runs) {
    Bucket& b = grouped[run.dataset][run.heuristic];
    b.makespan.push_back(run.makespan);
    b.tardiness.push_back(run.tardiness);
    b.z.push_back(run.z);
    b.seconds.push_back(run.seconds);
    b.runs.push_back(&run);
  }

  std::set<std::string> heuristics;
  for (const auto& [dataset, by_heuristic] : grouped) {
    for (const auto& [heuristic, bucket] : by_heuristic) {
      heuristics.insert(heuristic);
      BenchmarkReport::Cell cell;
      cell.runs = static_cast<int>(bucket.runs.size());
      std::tie(cell.mean_makespan, cell.std_makespan) =
          mean_and_sample_std(bucket.makespan);
      std::tie(cell.mean_tardiness, cell.std_tardiness) =
          mean_and_sample_std(bucket.tardiness);
      cell.mean_z = mean_and_sample_std(bucket.z).first;
      cell.mean_seconds = mean_and_sample_std(bucket.seconds).first;
      report.cells[dataset][heuristic] = cell;
    }
  }

  // Objective table: one row per dataset, a makespan and a tardiness column
  // per heuristic, each as mean +- sample std.
  {
    std::vector<std::string> header{"dataset"};
    for (const std::string& h : heuristics) {
      header.push_back(h + " makespan");
      header.push_back(h + " tardiness");
    }
    std::vector<std::vector<std::string>> table{header};
    for (const auto& [dataset, by_heuristic] : report.cells) {
      std::vector<std::string> row{dataset};
      for (const std::string& h : heuristics) {
        auto it = by_heuristic.find(h);
        if (it == by_heuristic.end()) {
          row.push_back("-");
          row.push_back("-");
        } else {
          row.push_back(fixed2(it->second.mean_makespan) + " +- " +
                        fixed2(it->second.std_makespan));
          row.push_back(fixed2(it->second.mean_tardiness) + " +- " +
                        fixed2(it->second.std_tardiness));
        }
      }
      table.push_back(row);
    }
    report.objective_table = join_tabs(table);
  }

  // Timing table: long format, one row per dataset x heuristic x parallelism.
  {
    std::map<std::tuple<std::string, std::string, int>, std::vector<double>> timing;
    for (const BenchmarkRun& run : runs) {
      timing[{run.dataset, run.heuristic, run.parallelism}].push_back(run.seconds);
    }
    std::vector<std::vector<std::string>> table{
        {"dataset", "heuristic", "parallelism", "runs", "mean_seconds"}};
    for (const auto& [key, seconds] : timing) {
      table.push_back({std::get<0>(key), std::get<1>(key),
                       std::to_string(std::get<2>(key)),
                       std::to_string(seconds.size()),
                       fixed2(mean_and_sample_std(seconds).first)});
    }
    report.timing_table = join_tabs(table);
  }

  // Convergence: mean best-so-far objective per generation across runs.
  {
    std::string out = "generation,heuristic,dataset,mean_best_z\n";
    std::map<std::tuple<int, std::string, std::string>, std::vector<double>> by_gen;
    for (const BenchmarkRun& run : runs) {
      for (const GenerationStat& stat : run.trajectory) {
        by_gen[{stat.generation, run.heuristic, run.dataset}].push_back(stat.best_z);
      }
    }
    for (const auto& [key, zs] : by_gen) {
      out += std::to_string(std::get<0>(key)) + "," + std::get<1>(key) + "," +
             std::get<2>(key) + "," + num(mean_and_sample_std(zs).first) + "\n";
    }
    report.convergence_csv = out;
  }

  return report;
}

}  // namespace shopsched
