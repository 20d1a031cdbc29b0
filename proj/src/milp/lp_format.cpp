#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "cbmuc/milp.hpp"

namespace cbmuc::milp {

namespace {

std::string num(double v) {
    if (v == kInf) return "+inf";
    if (v == -kInf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_terms(std::ostream& out, const std::vector<int>& cols, const std::vector<double>& coefs,
                 const LinearModel& model, bool keep_zero = false) {
    int written = 0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        double c = coefs[k];
        if (c == 0.0 && !keep_zero) continue;
        out << (c < 0 ? " - " : " + ") << num(std::abs(c)) << ' ' << model.column(cols[k]).name;
        if (++written % 6 == 0) out << "\n   ";
    }
    if (written == 0) out << " 0 " << (model.num_columns() > 0 ? model.column(0).name : "");
}

const char* sense_token(Sense s) {
    switch (s) {
    case Sense::LessEqual: return "<=";
    case Sense::GreaterEqual: return ">=";
    case Sense::Equal: return "=";
    }
    return "=";
}

}  // namespace

void write_lp_format(std::ostream& out, const LinearModel& model) {
    out << "\\ cbmuc model: " << model.num_columns() << " columns, " << model.num_rows()
        << " rows\n";
    out << "Minimize\n obj:";
    std::vector<int> cols;
    std::vector<double> coefs;
    for (int j = 0; j < model.num_columns(); ++j) {
        cols.push_back(j);
        coefs.push_back(model.column(j).cost);
    }
    // every column appears in the objective so a reader recreates the column order
    write_terms(out, cols, coefs, model, true);
    if (model.objective_offset() != 0.0)
        out << (model.objective_offset() < 0 ? " - " : " + ") << num(std::abs(model.objective_offset()));
    out << "\nSubject To\n";
    for (const Row& r : model.rows()) {
        out << ' ' << r.name << ':';
        write_terms(out, r.cols, r.coefs, model);
        out << ' ' << sense_token(r.sense) << ' ' << num(r.rhs) << '\n';
    }
    out << "Bounds\n";
    for (const Column& c : model.columns()) {
        if (c.lower == -kInf && c.upper == kInf)
            out << ' ' << c.name << " free\n";
        else if (c.lower == c.upper)
            out << ' ' << c.name << " = " << num(c.lower) << '\n';
        else
            out << ' ' << num(c.lower) << " <= " << c.name << " <= " << num(c.upper) << '\n';
    }
    bool any = false;
    for (const Column& c : model.columns()) {
        if (!c.integer) continue;
        if (!any) out << "Generals\n";
        any = true;
        out << ' ' << c.name << '\n';
    }
    out << "End\n";
}

namespace {

enum class Section { None, Objective, Constraints, Bounds, Generals, Binaries };

struct Tokenizer {
    std::vector<std::string> tokens;
    std::size_t pos = 0;

    explicit Tokenizer(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            auto bs = line.find('\\');
            if (bs != std::string::npos) line.erase(bs);
            std::size_t i = 0;
            while (i < line.size()) {
                char c = line[i];
                if (std::isspace(static_cast<unsigned char>(c))) {
                    ++i;
                } else if (c == '<' || c == '>' || c == '=') {
                    std::string op(1, c);
                    if (i + 1 < line.size() && line[i + 1] == '=') {
                        if (c != '=') op += '=';
                        ++i;
                    } else if (c == '<') {
                        op = "<=";
                    } else if (c == '>') {
                        op = ">=";
                    }
                    tokens.push_back(op);
                    ++i;
                } else if (c == '+' || c == '-' || c == ':') {
                    tokens.emplace_back(1, c);
                    ++i;
                } else {
                    std::size_t j = i;
                    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) &&
                           line[j] != ':' && line[j] != '<' && line[j] != '>' && line[j] != '=' &&
                           !((line[j] == '+' || line[j] == '-') && j > i &&
                             line[j - 1] != 'e' && line[j - 1] != 'E'))
                        ++j;
                    tokens.push_back(line.substr(i, j - i));
                    i = j;
                }
            }
            tokens.emplace_back("\n");
        }
    }
};

bool is_number(const std::string& s, double& v) {
    std::string low;
    for (char c : s) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (low == "inf" || low == "infinity") {
        v = kInf;
        return true;
    }
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    return end && *end == '\0' && !s.empty();
}

std::string lower(const std::string& s) {
    std::string r;
    for (char c : s) r += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return r;
}

}  // namespace

LinearModel read_lp_format(std::istream& in) {
    Tokenizer tz(in);
    const auto& t = tz.tokens;
    LinearModel model;
    std::map<std::string, int> index;
    auto column_of = [&](const std::string& name) {
        auto it = index.find(name);
        if (it != index.end()) return it->second;
        int j = model.add_column(name, 0.0, kInf, 0.0);
        index.emplace(name, j);
        return j;
    };

    Section sec = Section::None;
    std::size_t i = 0;
    auto skip_newlines = [&] {
        while (i < t.size() && t[i] == "\n") ++i;
    };
    // parses `[+|-] [coef] name ...` until a sense token, newline-terminated
    // section keyword or end; returns terms and constant
    auto parse_expr = [&](std::vector<std::pair<int, double>>& terms, double& constant,
                          bool stop_at_newline) {
        double sign = 1.0;
        double coef = 1.0;
        bool have_coef = false;
        while (i < t.size()) {
            const std::string& tok = t[i];
            if (tok == "\n") {
                if (stop_at_newline) break;
                std::size_t k = i;
                while (k < t.size() && t[k] == "\n") ++k;
                if (k >= t.size()) break;
                std::string lk = lower(t[k]);
                if (lk == "subject" || lk == "st" || lk == "s.t." || lk == "bounds" ||
                    lk == "generals" || lk == "general" || lk == "binaries" || lk == "binary" ||
                    lk == "end")
                    break;
                if (k + 1 < t.size() && t[k + 1] == ":") break;
                i = k;
                continue;
            }
            if (tok == "<=" || tok == ">=" || tok == "=") break;
            if (tok == "+") {
                ++i;
                continue;
            }
            if (tok == "-") {
                sign = -sign;
                ++i;
                continue;
            }
            double v;
            if (is_number(tok, v)) {
                if (have_coef) {
                    constant += sign * coef;
                    sign = 1.0;
                }
                coef = v;
                have_coef = true;
                ++i;
                // a number not followed by a name is a constant
                if (i >= t.size() || t[i] == "+" || t[i] == "-" || t[i] == "\n" ||
                    t[i] == "<=" || t[i] == ">=" || t[i] == "=") {
                    constant += sign * coef;
                    sign = 1.0;
                    coef = 1.0;
                    have_coef = false;
                }
                continue;
            }
            terms.emplace_back(column_of(tok), sign * coef);
            sign = 1.0;
            coef = 1.0;
            have_coef = false;
            ++i;
        }
    };

    std::vector<std::pair<int, double>> objective;
    double obj_const = 0.0;
    while (i < t.size()) {
        skip_newlines();
        if (i >= t.size()) break;
        std::string lk = lower(t[i]);
        if (lk == "minimize" || lk == "minimise" || lk == "min") {
            sec = Section::Objective;
            ++i;
            skip_newlines();
            if (i + 1 < t.size() && t[i + 1] == ":") i += 2;
            parse_expr(objective, obj_const, false);
            continue;
        }
        if (lk == "maximize" || lk == "max") throw ModelError("maximization is not supported");
        if (lk == "subject" || lk == "st" || lk == "s.t.") {
            sec = Section::Constraints;
            ++i;
            if (i < t.size() && lower(t[i]) == "to") ++i;
            continue;
        }
        if (lk == "bounds") {
            sec = Section::Bounds;
            ++i;
            continue;
        }
        if (lk == "generals" || lk == "general") {
            sec = Section::Generals;
            ++i;
            continue;
        }
        if (lk == "binaries" || lk == "binary") {
            sec = Section::Binaries;
            ++i;
            continue;
        }
        if (lk == "end") break;

        if (sec == Section::Constraints) {
            std::string name = "R" + std::to_string(model.num_rows());
            if (i + 1 < t.size() && t[i + 1] == ":") {
                name = t[i];
                i += 2;
            }
            std::vector<std::pair<int, double>> terms;
            double c = 0.0;
            parse_expr(terms, c, false);
            if (i >= t.size()) throw ModelError("constraint '" + name + "' lacks a sense");
            Sense s = t[i] == "<=" ? Sense::LessEqual
                      : t[i] == ">=" ? Sense::GreaterEqual
                                     : Sense::Equal;
            ++i;
            double sign = 1.0;
            if (i < t.size() && (t[i] == "-" || t[i] == "+")) {
                if (t[i] == "-") sign = -1.0;
                ++i;
            }
            double rhs;
            if (i >= t.size() || !is_number(t[i], rhs))
                throw ModelError("constraint '" + name + "' has a malformed right-hand side");
            ++i;
            model.add_row(name, terms, s, sign * rhs - c);
        } else if (sec == Section::Bounds) {
            // collect tokens up to the newline
            std::vector<std::string> line;
            while (i < t.size() && t[i] != "\n") line.push_back(t[i++]);
            // fold unary signs into numbers
            std::vector<std::string> toks;
            for (std::size_t k = 0; k < line.size(); ++k) {
                if ((line[k] == "-" || line[k] == "+") && k + 1 < line.size()) {
                    toks.push_back((line[k] == "-" ? "-" : "") + line[k + 1]);
                    ++k;
                } else {
                    toks.push_back(line[k]);
                }
            }
            auto value = [&](const std::string& s) {
                double v;
                std::string body = s;
                double sg = 1.0;
                if (!body.empty() && body[0] == '-') {
                    sg = -1.0;
                    body = body.substr(1);
                }
                if (!is_number(body, v)) throw ModelError("malformed bound value '" + s + "'");
                return sg * v;
            };
            if (toks.size() == 2 && lower(toks[1]) == "free") {
                int j = column_of(toks[0]);
                model.column(j).lower = -kInf;
                model.column(j).upper = kInf;
            } else if (toks.size() == 5) {
                int j = column_of(toks[2]);
                model.column(j).lower = value(toks[0]);
                model.column(j).upper = value(toks[4]);
            } else if (toks.size() == 3) {
                double v;
                bool left_num = is_number(toks[0][0] == '-' ? toks[0].substr(1) : toks[0], v);
                const std::string& name = left_num ? toks[2] : toks[0];
                double val = value(left_num ? toks[0] : toks[2]);
                std::string op = toks[1];
                if (left_num) op = op == "<=" ? ">=" : op == ">=" ? "<=" : op;
                int j = column_of(name);
                if (op == "=") {
                    model.column(j).lower = val;
                    model.column(j).upper = val;
                } else if (op == "<=") {
                    model.column(j).upper = val;
                } else {
                    model.column(j).lower = val;
                }
            } else if (!toks.empty()) {
                throw ModelError("malformed bound line");
            }
        } else if (sec == Section::Generals || sec == Section::Binaries) {
            int j = column_of(t[i]);
            model.column(j).integer = true;
            if (sec == Section::Binaries) {
                model.column(j).lower = std::max(model.column(j).lower, 0.0);
                model.column(j).upper = std::min(model.column(j).upper, 1.0);
            }
            ++i;
        } else {
            throw ModelError("unexpected token '" + t[i] + "' outside any section");
        }
    }
    for (const auto& [j, c] : objective) model.column(j).cost += c;
    model.set_objective_offset(obj_const);
    return model;
}

}  // namespace cbmuc::milp
