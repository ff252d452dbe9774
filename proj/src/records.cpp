#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "amoc/error.hpp"
#include "amoc/features.hpp"
#include "csv_util.hpp"

namespace amoc {
namespace {

using csv::fmt_double;
using csv::quote;

std::string where(std::size_t line_no) { return "records CSV line " + std::to_string(line_no); }

std::vector<std::string> header_for(std::span<const std::uint32_t> non_baseline_sizes) {
  std::vector<std::string> h = {"pair_id", "spec", "ate_s", "ate_t", "f1_s", "p_s_t"};
  for (auto s : non_baseline_sizes) h.push_back(terms::size_indicator(s));
  h.insert(h.end(), {"ate_t_x_p_s_t", "f1_s_x_p_s_t", "target_f1"});
  return h;
}

}  // namespace

std::string records_to_csv(std::span<const CandidateRecord> records) {
  std::vector<std::uint32_t> sizes;
  if (!records.empty()) {
    for (const auto& [size, _] : records.front().size_indicators) sizes.push_back(size);
  }
  std::ostringstream out;
  const auto header = header_for(sizes);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : records) {
    if (r.size_indicators.size() != sizes.size()) {
      throw InputError("records_to_csv: records disagree on removal sizes");
    }
    out << quote(r.pair_id) << ',' << quote(r.spec.to_json()) << ',' << fmt_double(r.ate_source.value) << ','
        << fmt_double(r.ate_target.value) << ',' << fmt_double(r.f1_source) << ',' << fmt_double(r.p_s_given_t);
    for (auto s : sizes) out << ',' << r.size_indicators.at(s);
    out << ',' << fmt_double(r.ate_target_x_p_s_t) << ',' << fmt_double(r.f1_source_x_p_s_t) << ',';
    if (r.target_f1) out << fmt_double(*r.target_f1);
    out << '\n';
  }
  return out.str();
}

std::vector<CandidateRecord> records_from_csv(const std::string& text, std::uint32_t depth) {
  if (depth == 0) depth = std::numeric_limits<std::uint32_t>::max();
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("records CSV: missing header");
  const auto header = csv::split_line(line, where(1));
  std::vector<std::uint32_t> sizes;
  for (const auto& h : header) {
    if (h.rfind("ind_size_", 0) == 0) sizes.push_back(static_cast<std::uint32_t>(std::stoul(h.substr(9))));
  }
  if (header != header_for(sizes)) throw FormatError("records CSV: unexpected header '" + line + "'");

  std::vector<CandidateRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = csv::split_line(line, where(line_no));
    if (cells.size() != header.size()) {
      throw FormatError("records CSV line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " cells");
    }
    CandidateRecord r;
    r.pair_id = cells[0];
    try {
      r.spec = CandidateSpec::parse(cells[1], depth);
    } catch (const InputError& e) {
      throw FormatError("records CSV line " + std::to_string(line_no) + ": " + e.what());
    }
    r.ate_source.value = csv::parse_double(cells[2], where(line_no));
    r.ate_target.value = csv::parse_double(cells[3], where(line_no));
    r.f1_source = csv::parse_double(cells[4], where(line_no));
    r.p_s_given_t = csv::parse_double(cells[5], where(line_no));
    std::size_t col = 6;
    bool any_flag = false;
    for (auto s : sizes) {
      const auto& cell = cells[col++];
      if (cell != "0" && cell != "1") throw FormatError("records CSV line " + std::to_string(line_no) + ": bad flag");
      r.size_indicators[s] = cell == "1" ? 1 : 0;
      any_flag = any_flag || cell == "1";
    }
    r.ate_target_x_p_s_t = csv::parse_double(cells[col++], where(line_no));
    r.f1_source_x_p_s_t = csv::parse_double(cells[col++], where(line_no));
    if (!cells[col].empty()) r.target_f1 = csv::parse_double(cells[col], where(line_no));
    r.run_sizes = sizes;
    if (!any_flag) r.run_sizes.push_back(static_cast<std::uint32_t>(r.spec.size()));
    out.push_back(std::move(r));
  }
  // The baseline size is not a column; recover it from the unflagged records.
  std::vector<std::uint32_t> all = sizes;
  for (const auto& r : out) all.insert(all.end(), r.run_sizes.begin(), r.run_sizes.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  for (auto& r : out) r.run_sizes = all;
  return out;
}

void write_records(const std::filesystem::path& path, std::span<const CandidateRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << records_to_csv(records);
}

std::vector<CandidateRecord> read_records(const std::filesystem::path& path, std::uint32_t depth) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open records file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return records_from_csv(buf.str(), depth);
}

}  // namespace amoc
