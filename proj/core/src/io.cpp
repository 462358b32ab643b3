#include "scoreleak/io.hpp"

#include <fstream>
#include <string>
#include <string_view>

#include "scoreleak/error.hpp"

namespace scoreleak {

namespace {

std::ofstream open_for_writing(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  }
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
  }
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) {
    text.remove_suffix(1);
  }
  while (!text.empty() && text.front() == ' ') {
    text.remove_prefix(1);
  }
  return text;
}

// Reads "id,<value>" rows and hands each value cell to `on_value`.
template <typename OnValue>
void read_id_value_csv(const std::filesystem::path& path, std::string_view header,
                       OnValue&& on_value) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line) || trim(line) != header) {
    throw Error(ErrorCode::ParseError,
                path.string() + ": expected header '" + std::string(header) + "'");
  }
  std::size_t expected_id = 1;
  while (std::getline(in, line)) {
    const std::string_view row = trim(line);
    if (row.empty()) {
      continue;
    }
    const auto comma = row.find(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, path.string() + ": malformed row '" + line + "'");
    }
    const Rational id = parse_exact(trim(row.substr(0, comma)));
    if (id != Rational(expected_id)) {
      throw Error(ErrorCode::ParseError, path.string() + ": ids must run 1..n in order, row " +
                                             std::to_string(expected_id));
    }
    on_value(trim(row.substr(comma + 1)));
    ++expected_id;
  }
}

}  // namespace

void write_ground_truth_csv(const std::filesystem::path& path, std::span<const double> labels) {
  std::ofstream out = open_for_writing(path);
  out << "id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << (i + 1) << ',' << format_shortest(labels[i]) << '\n';
  }
  finish(out, path);
}

std::vector<double> read_ground_truth_csv(const std::filesystem::path& path) {
  std::vector<double> labels;
  read_id_value_csv(path, "id,label",
                    [&](std::string_view cell) { labels.push_back(parse_double(cell)); });
  return labels;
}

void write_submission_csv(const std::filesystem::path& path, const Submission& submission) {
  std::ofstream out = open_for_writing(path);
  out << "id,prediction\n";
  for (std::size_t i = 0; i < submission.size(); ++i) {
    out << (i + 1) << ',' << format_exact(submission[i]) << '\n';
  }
  finish(out, path);
}

Submission read_submission_csv(const std::filesystem::path& path) {
  std::vector<Rational> entries;
  read_id_value_csv(path, "id,prediction",
                    [&](std::string_view cell) { entries.push_back(parse_exact(cell)); });
  return Submission(std::move(entries));
}

}  // namespace scoreleak
