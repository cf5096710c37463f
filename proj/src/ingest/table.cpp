#include <charconv>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "occupant/ingest.hpp"

namespace occupant::ingest {

namespace {

// Splits CSV text into records. Quoted fields may contain commas, doubled
// quotes and newlines.
std::vector<std::vector<std::string>> parse_records(const std::string& text,
                                                    const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    i = 3;
  }
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError(source + ": unterminated quoted field at end of file");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

}  // namespace

RawTable parse_table(const std::string& text, const std::string& source) {
  auto records = parse_records(text, source);
  if (records.empty()) throw ParseError(source + ": missing header line");
  RawTable table;
  table.column_names = std::move(records.front());
  std::set<std::string> seen;
  for (std::size_t c = 0; c < table.column_names.size(); ++c) {
    auto& name = table.column_names[c];
    name = trim(name);
    if (name.empty()) {
      throw ParseError(source + ": empty column name at header position " + std::to_string(c),
                       ParseError::npos, c);
    }
    if (!seen.insert(name).second) {
      throw ParseError(source + ": duplicate column name " + name, ParseError::npos, c);
    }
  }
  table.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    // A fully blank line, common at end of file, is not a record.
    if (rec.size() == 1 && trim(rec[0]).empty() && table.n_cols() != 1) continue;
    if (rec.size() != table.n_cols()) {
      throw ParseError(source + ": ragged row " + std::to_string(r - 1) + " has " +
                           std::to_string(rec.size()) + " cells, expected " +
                           std::to_string(table.n_cols()),
                       r - 1);
    }
    table.rows.push_back(std::move(rec));
  }
  return table;
}

RawTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open table: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_table(text, path.string());
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset: " + path.string());
  const auto& cols = data.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out << ',';
    out << cols[c];
  }
  out << '\n';
  const auto& m = data.matrix();
  std::string line;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    line.clear();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) line.push_back(',');
      line += format_number(m(r, c));
    }
    line.push_back('\n');
    out << line;
  }
  if (!out) throw Error("write failed: " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  RawTable raw = load_table(path);
  Matrix m(raw.n_rows(), raw.n_cols());
  for (std::size_t r = 0; r < raw.n_rows(); ++r) {
    for (std::size_t c = 0; c < raw.n_cols(); ++c) {
      const std::string& cell = raw.rows[r][c];
      double v = 0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw ParseError(path.string() + ": non-numeric cell '" + cell + "' in cleaned dataset", r,
                         c);
      }
      m(r, c) = v;
    }
  }
  Provenance prov;
  prov.source = path.string();
  prov.source_digest = sha256_file(path.string());
  return Dataset(raw.column_names, std::move(m), std::move(prov));
}

}  // namespace occupant::ingest
