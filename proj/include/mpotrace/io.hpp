#pragma once

#include "mpotrace/mpo.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace mpotrace {

using json = nlohmann::json;

// Document layout: {"kind": "mpo"|"mps", "L", "d", "log_scale", "sites"}
// where every site is a nested array in declared index order and each
// scalar is [re, im]. An optional "metadata" object is carried along.
[[nodiscard]] json to_json(const Mpo &m);
[[nodiscard]] json to_json(const Mps &m);
[[nodiscard]] Mpo  mpo_from_json(const json &doc);
[[nodiscard]] Mps  mps_from_json(const json &doc);

struct MpoDocument {
    Mpo  mpo;
    json metadata = json::object();
};

void                      write_mpo(const std::filesystem::path &path, const Mpo &m, const json &metadata = json::object());
[[nodiscard]] MpoDocument read_mpo(const std::filesystem::path &path);

void               write_text(const std::filesystem::path &path, const std::string &text);
[[nodiscard]] json read_json(const std::filesystem::path &path);

} // namespace mpotrace
