#include "gpufaas/catalog.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gpufaas {

namespace {

std::runtime_error parse_error(const std::string& origin, std::size_t line, const std::string& what) {
    return std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& field, const std::string& origin, std::size_t line,
                    const std::string& name) {
    try {
        std::size_t pos = 0;
        double v = std::stod(field, &pos);
        if (pos != field.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw parse_error(origin, line, "bad " + name + " value '" + field + "'");
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

Catalog Catalog::from_rows(std::vector<ModelProfile> rows) {
    Catalog c;
    c.profiles_ = std::move(rows);
    for (std::size_t i = 0; i < c.profiles_.size(); ++i) {
        const ModelProfile& p = c.profiles_[i];
        if (p.model_id.empty())
            throw std::runtime_error("catalog: empty model_id at row " + std::to_string(i + 1));
        if (p.occupation_mb <= 0 || p.load_time_us <= 0 || p.infer_time_us <= 0)
            throw std::runtime_error("catalog: non-positive value for model '" + p.model_id + "'");
        if (!c.index_.emplace(p.model_id, i).second)
            throw std::runtime_error("catalog: duplicate model_id '" + p.model_id + "'");
    }
    return c;
}

const ModelProfile* Catalog::find(const std::string& model_id) const {
    auto it = index_.find(model_id);
    return it == index_.end() ? nullptr : &profiles_[it->second];
}

const ModelProfile& Catalog::lookup(const std::string& model_id) const {
    const ModelProfile* p = find(model_id);
    if (!p) throw std::runtime_error("catalog: unknown model '" + model_id + "'");
    return *p;
}

Catalog parse_catalog_csv(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty catalog file");
    ++lineno;
    if (split_csv_line(line) !=
        std::vector<std::string>{"model_id", "occupation_mb", "load_time_s", "infer_time_s"})
        throw parse_error(origin, lineno, "bad header '" + line + "'");

    std::vector<ModelProfile> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw parse_error(origin, lineno,
                              "expected 4 fields, got " + std::to_string(fields.size()));
        ModelProfile p;
        p.model_id = fields[0];
        p.occupation_mb = parse_number(fields[1], origin, lineno, "occupation_mb");
        p.load_time_us = seconds_to_us(parse_number(fields[2], origin, lineno, "load_time_s"));
        p.infer_time_us = seconds_to_us(parse_number(fields[3], origin, lineno, "infer_time_s"));
        if (p.model_id.empty()) throw parse_error(origin, lineno, "empty model_id");
        if (p.occupation_mb <= 0 || p.load_time_us <= 0 || p.infer_time_us <= 0)
            throw parse_error(origin, lineno, "non-positive value for model '" + p.model_id + "'");
        rows.push_back(std::move(p));
    }
    if (rows.empty()) throw std::runtime_error(origin + ": catalog has no model rows");

    try {
        return Catalog::from_rows(std::move(rows));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
}

Catalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open catalog file '" + path + "'");
    return parse_catalog_csv(in, path);
}

std::string catalog_to_csv(const Catalog& catalog) {
    std::ostringstream out;
    out << "model_id,occupation_mb,load_time_s,infer_time_s\n";
    char buf[96];
    for (const ModelProfile& p : catalog.profiles()) {
        // %.6f preserves integer microseconds exactly; %.17g round-trips the
        // occupation double.
        std::snprintf(buf, sizeof buf, ",%.17g,%.6f,%.6f\n", p.occupation_mb,
                      us_to_seconds(p.load_time_us), us_to_seconds(p.infer_time_us));
        out << p.model_id << buf;
    }
    return out.str();
}

void save_catalog(const Catalog& catalog, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write catalog file '" + path + "'");
    out << catalog_to_csv(catalog);
    if (!out.good()) throw std::runtime_error("short write to catalog file '" + path + "'");
}

}  // namespace gpufaas
