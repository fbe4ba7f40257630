#include "psjnet/eval/report.hpp"

#include <cstdio>
#include <sstream>

#include "psjnet/error.hpp"
#include "psjnet/eval/metrics.hpp"

namespace psjnet {

namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

constexpr int kLabelWidth = 14;
constexpr int kCellWidth = 7;

std::string pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

std::vector<double> DomainResult::hits(std::size_t k) const {
  std::vector<double> out;
  out.reserve(ranks.size());
  for (std::size_t r : ranks) out.push_back(hit_at_k(r, k));
  return out;
}

std::vector<double> DomainResult::reciprocal_ranks(std::size_t k) const {
  std::vector<double> out;
  out.reserve(ranks.size());
  for (std::size_t r : ranks) out.push_back(reciprocal_rank_at_k(r, k));
  return out;
}

double DomainResult::recall(std::size_t k) const { return mean(hits(k)); }
double DomainResult::mrr(std::size_t k) const { return mean(reciprocal_ranks(k)); }

std::string EvalReport::table_header(const std::vector<std::size_t>& cutoffs) {
  const std::size_t span = 2 * cutoffs.size() * kCellWidth;
  std::ostringstream os;
  os << pad("", kLabelWidth, true) << " | " << pad("A-domain", span, true) << " | "
     << pad("B-domain", span, true) << "\n";
  os << pad("Method", kLabelWidth, true);
  for (int dom = 0; dom < 2; ++dom) {
    os << " | ";
    for (const char* m : {"MRR", "Rec"}) {
      for (std::size_t k : cutoffs) os << pad(std::string(m) + "@" + std::to_string(k), kCellWidth);
    }
  }
  os << "\n";
  return os.str();
}

std::string EvalReport::table_row() const {
  std::ostringstream os;
  os << pad(label.empty() ? "model" : label, kLabelWidth, true);
  for (const DomainResult& r : domain) {
    os << " | ";
    for (std::size_t k : cutoffs) os << pad(fixed(100.0 * r.mrr(k), 2), kCellWidth);
    for (std::size_t k : cutoffs) os << pad(fixed(100.0 * r.recall(k), 2), kCellWidth);
  }
  os << "\n";
  return os.str();
}

std::string EvalReport::table() const { return table_header(cutoffs) + table_row(); }

std::string EvalReport::key_values() const {
  std::ostringstream os;
  for (Domain d : kDomains) {
    const DomainResult& r = at(d);
    const char c = domain_char(d);
    os << c << ".cases=" << r.cases() << "\n";
    os << c << ".skipped_oov_truth=" << r.skipped_oov_truth << "\n";
    os << c << ".dropped_context=" << r.dropped_context << "\n";
    for (std::size_t k : cutoffs) {
      os << c << ".recall@" << k << "=" << fixed(r.recall(k), 6) << "\n";
      os << c << ".mrr@" << k << "=" << fixed(r.mrr(k), 6) << "\n";
    }
  }
  return os.str();
}

std::vector<std::size_t> parse_cutoffs(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad cutoff '" + tok + "'");
    }
    if (used != tok.size() || v == 0 || tok.front() == '-') throw ConfigError("bad cutoff '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("no cutoffs given");
  return out;
}

}  // namespace psjnet
