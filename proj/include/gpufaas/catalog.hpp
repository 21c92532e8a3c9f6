#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "gpufaas/sim_time.hpp"

namespace gpufaas {

// One servable model: peak GPU memory footprint plus measured load and
// inference times (stored as integer microseconds).
struct ModelProfile {
    std::string model_id;
    double occupation_mb = 0.0;
    SimTime load_time_us = 0;
    SimTime infer_time_us = 0;

    bool operator==(const ModelProfile&) const = default;
};

class Catalog {
public:
    Catalog() = default;

    // Validates ids (non-empty, unique) and positivity of all numbers.
    static Catalog from_rows(std::vector<ModelProfile> rows);

    const ModelProfile& lookup(const std::string& model_id) const;
    const ModelProfile* find(const std::string& model_id) const;
    bool contains(const std::string& model_id) const { return find(model_id) != nullptr; }

    const std::vector<ModelProfile>& profiles() const { return profiles_; }
    std::size_t size() const { return profiles_.size(); }

    bool operator==(const Catalog& other) const { return profiles_ == other.profiles_; }

private:
    std::vector<ModelProfile> profiles_;  // file order
    std::unordered_map<std::string, std::size_t> index_;
};

// CSV with header: model_id,occupation_mb,load_time_s,infer_time_s
// Parse errors carry the origin (path) and 1-based line number.
Catalog parse_catalog_csv(std::istream& in, const std::string& origin);
Catalog load_catalog(const std::string& path);

std::string catalog_to_csv(const Catalog& catalog);
void save_catalog(const Catalog& catalog, const std::string& path);

}  // namespace gpufaas
