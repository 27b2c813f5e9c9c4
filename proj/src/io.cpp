#include "mpotrace/io.hpp"

#include "mpotrace/errors.hpp"

#include <fstream>
#include <sstream>

namespace mpotrace {

namespace {
    // Nested arrays over `shape` starting at `axis`, row-major.
    json encode(std::span<const cplx> data, std::span<const Index> shape, Index axis, Index &pos) {
        json out = json::array();
        for(Index i = 0; i < shape[axis]; ++i) {
            if(axis + 1 == shape.size()) {
                const cplx z = data[pos++];
                out.push_back(json::array({z.real(), z.imag()}));
            } else {
                out.push_back(encode(data, shape, axis + 1, pos));
            }
        }
        return out;
    }

    void decode(const json &node, std::span<const Index> shape, Index axis, std::vector<cplx> &out) {
        if(!node.is_array() || node.size() != shape[axis]) {
            std::ostringstream msg;
            msg << "site array at depth " << axis << " should have " << shape[axis] << " entries";
            throw FormatError(msg.str());
        }
        for(const auto &child : node) {
            if(axis + 1 == shape.size()) {
                if(!child.is_array() || child.size() != 2 || !child[0].is_number() || !child[1].is_number())
                    throw FormatError("scalars must be [re, im] pairs");
                out.emplace_back(child[0].get<double>(), child[1].get<double>());
            } else {
                decode(child, shape, axis + 1, out);
            }
        }
    }

    // Extents of a nested array by following its first elements.
    Shape probe_shape(const json &node, Index rank) {
        Shape       shape;
        const json *cur = &node;
        for(Index a = 0; a < rank; ++a) {
            if(!cur->is_array() || cur->empty()) throw FormatError("site is not a nested array of rank " + std::to_string(rank));
            shape.push_back(cur->size());
            cur = &(*cur)[0];
        }
        return shape;
    }

    json header(std::string_view kind, Index L, Index d, double log_scale) {
        return json{{"kind", kind}, {"L", L}, {"d", d}, {"log_scale", log_scale}};
    }

    std::vector<Tensor> read_sites(const json &doc, std::string_view kind, Index rank) {
        if(!doc.is_object()) throw FormatError("document is not a JSON object");
        for(const char *key : {"kind", "L", "d", "log_scale", "sites"})
            if(!doc.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
        if(doc["kind"] != kind) throw FormatError("expected kind '" + std::string(kind) + "'");
        const auto L     = doc["L"].get<Index>();
        const auto d     = doc["d"].get<Index>();
        const auto &list = doc["sites"];
        if(!list.is_array() || list.size() != L) throw FormatError("sites must list L tensors");
        std::vector<Tensor> sites;
        for(const auto &node : list) {
            const Shape       shape = probe_shape(node, rank);
            std::vector<cplx> data;
            data.reserve(shape_product(shape));
            decode(node, shape, 0, data);
            if(shape[0] != d || (rank == 4 && shape[1] != d)) throw FormatError("physical extent differs from d");
            sites.emplace_back(shape, std::move(data));
        }
        return sites;
    }
} // namespace

json to_json(const Mpo &m) {
    json doc  = header("mpo", m.length(), m.phys_dim(), m.log_scale());
    json list = json::array();
    for(const auto &s : m.sites()) {
        Index pos = 0;
        list.push_back(encode(s.data(), s.shape(), 0, pos));
    }
    doc["sites"] = std::move(list);
    return doc;
}

json to_json(const Mps &m) {
    json doc  = header("mps", m.length(), m.phys_dim(), m.log_scale());
    json list = json::array();
    for(const auto &s : m.sites()) {
        Index pos = 0;
        list.push_back(encode(s.data(), s.shape(), 0, pos));
    }
    doc["sites"] = std::move(list);
    return doc;
}

Mpo mpo_from_json(const json &doc) {
    try {
        return Mpo(read_sites(doc, "mpo", 4), doc["log_scale"].get<double>());
    } catch(const json::exception &e) {
        throw FormatError(e.what());
    }
}

Mps mps_from_json(const json &doc) {
    try {
        return Mps(read_sites(doc, "mps", 3), doc["log_scale"].get<double>());
    } catch(const json::exception &e) {
        throw FormatError(e.what());
    }
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path);
    if(!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if(!out) throw std::runtime_error("failed writing " + path.string());
}

json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if(!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch(const json::parse_error &e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_mpo(const std::filesystem::path &path, const Mpo &m, const json &metadata) {
    json doc = to_json(m);
    if(!metadata.empty()) doc["metadata"] = metadata;
    write_text(path, doc.dump() + "\n");
}

MpoDocument read_mpo(const std::filesystem::path &path) {
    const json  doc = read_json(path);
    MpoDocument out{mpo_from_json(doc)};
    if(doc.contains("metadata")) out.metadata = doc["metadata"];
    return out;
}

} // namespace mpotrace
