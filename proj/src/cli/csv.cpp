#include "hdprior/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "hdprior/errors.hpp"

namespace hdprior::cli {

namespace {

// Splits one record; reads further lines when a quoted field spans them.
bool next_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (quoted) {
        std::string more;
        if (!std::getline(in, more)) throw DataError("csv: unterminated quoted field");
        line += '\n' + more;
        continue;
      }
      break;
    }
    const char c = line[i++];
    if (quoted) {
      if (c == '"') {
        if (i < line.size() && line[i] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  if (!next_record(in, t.header)) throw DataError("csv: empty input");
  std::vector<std::string> rec;
  std::size_t line = 1;
  while (next_record(in, rec)) {
    ++line;
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != t.header.size()) {
      throw DataError("csv: row " + std::to_string(t.rows.size() + 1) + " has " +
                      std::to_string(rec.size()) + " fields, expected " +
                      std::to_string(t.header.size()));
    }
    t.rows.push_back(rec);
  }
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return read_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out << f;
    } else {
      out << '"';
      for (char c : f) out << (c == '"' ? "\"\"" : std::string(1, c));
      out << '"';
    }
  }
  out << '\n';
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

bool parse_number(const std::string& s, double& out) {
  std::size_t a = 0, b = s.size();
  while (a < b && s[a] == ' ') ++a;
  while (b > a && s[b - 1] == ' ') --b;
  if (a == b) return false;
  if (s[a] == '+') ++a;
  const auto r = std::from_chars(s.data() + a, s.data() + b, out);
  return r.ec == std::errc() && r.ptr == s.data() + b;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == ".";
}

}  // namespace hdprior::cli
