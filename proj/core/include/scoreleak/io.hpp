#pragma once

// CSV file formats shared with other tooling.
//   ground truth: header "id,label", ids 1..n, shortest round-trip doubles
//   submission:   header "id,prediction", ids 1..n, exact decimals

#include <filesystem>
#include <span>
#include <vector>

#include "scoreleak/oracle.hpp"

namespace scoreleak {

void write_ground_truth_csv(const std::filesystem::path& path, std::span<const double> labels);
std::vector<double> read_ground_truth_csv(const std::filesystem::path& path);

void write_submission_csv(const std::filesystem::path& path, const Submission& submission);
Submission read_submission_csv(const std::filesystem::path& path);

}  // namespace scoreleak
