#include "lmpinfer/matpower.hpp"

#include <cctype>
#include <cstdlib>
#include <map>
#include <sstream>
#include <vector>

namespace lmpinfer {

namespace {

using Matrix = std::vector<std::vector<double>>;

// Character scanner over the raw file text. Tracks line/column for error
// reporting and treats '%' comments as whitespace.
class Scanner {
 public:
  explicit Scanner(const std::string& text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void advance() {
    if (pos_ < text_.size()) {
      if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  // Consumes to the end of the current statement (';' or newline).
  void skip_statement() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        continue;
      }
      advance();
      if (c == ';' || c == '\n') return;
    }
  }

  std::string identifier() {
    skip_ws();
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        out.push_back(c);
        advance();
      } else {
        break;
      }
    }
    return out;
  }

  double number() {
    skip_ws();
    const int err_line = line_;
    const int err_col = col_;
    const char* start = text_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(start, &end);
    if (end == start) {
      std::string token;
      std::size_t p = pos_;
      while (p < text_.size() && !std::isspace(static_cast<unsigned char>(text_[p])) &&
             text_[p] != ';' && text_[p] != ']' && text_[p] != ',') {
        token.push_back(text_[p++]);
      }
      std::ostringstream msg;
      msg << "expected a number at line " << err_line << ", column " << err_col
          << " but found '" << (token.empty() ? std::string(1, peek()) : token) << "'";
      throw Error(errc::kParseSyntax, msg.str());
    }
    for (const char* c = start; c != end; ++c) advance();
    return v;
  }

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

Matrix parse_matrix(Scanner& sc, const std::string& name) {
  if (sc.peek() != '[') {
    std::ostringstream msg;
    msg << "matrix " << name << " must start with '[' (line " << sc.line() << ")";
    throw Error(errc::kParseSyntax, msg.str());
  }
  sc.advance();
  Matrix rows;
  std::vector<double> row;
  while (true) {
    char c = sc.peek();
    if (c == '\0') {
      throw Error(errc::kParseSyntax, "unterminated matrix " + name);
    }
    if (c == ';') {
      sc.advance();
      if (!row.empty()) rows.push_back(std::move(row));
      row.clear();
      continue;
    }
    if (c == ',') {
      sc.advance();
      continue;
    }
    if (c == ']') {
      sc.advance();
      if (!row.empty()) rows.push_back(std::move(row));
      break;
    }
    row.push_back(sc.number());
  }
  return rows;
}

void require_columns(const Matrix& m, std::size_t n, const std::string& name) {
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (m[r].size() < n) {
      std::ostringstream msg;
      msg << name << " row " << r + 1 << " has " << m[r].size() << " columns, expected >= "
          << n;
      throw Error(errc::kParseSyntax, msg.str());
    }
  }
}

}  // namespace

GridCase parse_matpower_case(const std::string& text) {
  Scanner sc(text);
  bool have_base = false;
  double base_mva = 0.0;
  std::map<std::string, Matrix> matrices;

  while (!sc.eof()) {
    std::string ident = sc.identifier();
    if (ident.empty()) {
      sc.advance();
      continue;
    }
    if (sc.peek() != '.') {
      sc.skip_statement();
      continue;
    }
    sc.advance();  // '.'
    std::string field = sc.identifier();
    if (sc.peek() != '=') {
      sc.skip_statement();
      continue;
    }
    sc.advance();  // '='

    if (field == "baseMVA") {
      base_mva = sc.number();
      have_base = true;
      sc.skip_statement();
    } else if (field == "bus" || field == "gen" || field == "branch" ||
               field == "gencost") {
      matrices[field] = parse_matrix(sc, field);
      sc.skip_statement();
    } else {
      sc.skip_statement();
    }
  }

  if (!have_base) throw Error(errc::kParseMissingMatrix, "missing assignment: baseMVA");
  for (const char* required : {"bus", "gen", "branch", "gencost"}) {
    if (matrices.find(required) == matrices.end()) {
      throw Error(errc::kParseMissingMatrix, std::string("missing matrix: ") + required);
    }
  }

  const Matrix& bus = matrices["bus"];
  const Matrix& gen = matrices["gen"];
  const Matrix& branch = matrices["branch"];
  const Matrix& gencost = matrices["gencost"];
  require_columns(bus, 4, "bus");
  require_columns(gen, 10, "gen");
  require_columns(branch, 6, "branch");
  require_columns(gencost, 4, "gencost");

  // MATPOWER permits 2*ngen gencost rows (second block prices reactive
  // power); only the first ngen rows apply here.
  if (gencost.size() != gen.size() && gencost.size() != 2 * gen.size()) {
    std::ostringstream msg;
    msg << "gencost has " << gencost.size() << " rows for " << gen.size() << " generators";
    throw Error(errc::kParseSyntax, msg.str());
  }

  GridCase gc;
  gc.base_mva = base_mva;

  int first_bus = 0;
  int slack = 0;
  for (std::size_t r = 0; r < bus.size(); ++r) {
    Bus b;
    b.id = static_cast<int>(bus[r][0]);
    b.p_load_nominal = bus[r][2];
    b.q_load_nominal = bus[r][3];
    gc.buses.push_back(b);
    if (r == 0) first_bus = b.id;
    if (slack == 0 && static_cast<int>(bus[r][1]) == 3) slack = b.id;
  }
  gc.slack_bus = slack != 0 ? slack : first_bus;

  for (std::size_t r = 0; r < gen.size(); ++r) {
    Generator g;
    g.id = static_cast<int>(r) + 1;  // MATPOWER generators are identified by row
    g.bus = static_cast<int>(gen[r][0]);
    g.in_service = gen[r][7] > 0.0;
    g.p_max = gen[r][8];
    g.p_min = gen[r][9];

    const auto& cost = gencost[r];
    const int model = static_cast<int>(cost[0]);
    const int ncost = static_cast<int>(cost[3]);
    if (model != 2 || ncost != 3) {
      std::ostringstream msg;
      msg << "gencost row " << r + 1 << ": only 3-term polynomial costs are supported "
          << "(model=" << model << ", ncost=" << ncost << ")";
      throw Error(errc::kParseUnsupportedCostModel, msg.str());
    }
    if (cost.size() < 7) {
      std::ostringstream msg;
      msg << "gencost row " << r + 1 << " declares 3 cost terms but has " << cost.size()
          << " columns";
      throw Error(errc::kParseSyntax, msg.str());
    }
    g.cost.a = cost[4];
    g.cost.b = cost[5];
    g.cost.c = cost[6];
    gc.generators.push_back(g);
  }

  for (std::size_t r = 0; r < branch.size(); ++r) {
    Line ln;
    ln.from_bus = static_cast<int>(branch[r][0]);
    ln.to_bus = static_cast<int>(branch[r][1]);
    const double x = branch[r][3];
    ln.susceptance = x != 0.0 ? 1.0 / x : 0.0;  // 0 is flagged by validate_case
    const double rate_a = branch[r][5];
    if (rate_a > 0.0) ln.flow_limit = rate_a;
    gc.lines.push_back(ln);
  }

  normalize_case(gc);
  return gc;
}

}  // namespace lmpinfer
