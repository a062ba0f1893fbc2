#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "locc/complex_matrix.hpp"
#include "locc/errors.hpp"
#include "locc/protocol.hpp"
#include "locc/states.hpp"

namespace locc::io {

using nlohmann::json;

// Complex numbers are always [re, im] pairs; a matrix is an array of rows of
// such pairs. State files carry explicit dims plus a flat row-major amplitude
// list.

inline json complex_to_json(const Complex& z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError("expected a [re, im] pair");
    return Complex{j[0].get<double>(), j[1].get<double>()};
}

inline json matrix_to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ComplexMatrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
        throw ParseError("expected a nonempty nested matrix array");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ParseError("ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = complex_from_json(j[i][c]);
    }
    if (!m.is_finite())
        throw ParseError("matrix entries must be finite");
    return m;
}

/// FNV-1a over a canonical 17-significant-digit rendering; ties a protocol
/// file to the states it was synthesized for.
inline std::string state_digest(const BipartiteState& s) {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](const std::string& text) {
        for (unsigned char c : text) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    char buf[96];
    std::snprintf(buf, sizeof buf, "state:%zux%zu:", s.dimA(), s.dimB());
    feed(buf);
    for (const Complex& z : s.matrix().entries()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g;", z.real(), z.imag());
        feed(buf);
    }
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out)
        throw ParseError("cannot write " + path);
    out << j.dump(1) << '\n';
}

struct LoadedState {
    BipartiteState state;
    double scale;       // norm divided out on load
    std::string digest; // of the normalized state
};

inline json state_to_json(const BipartiteState& s) {
    json amps = json::array();
    for (const Complex& z : s.matrix().entries()) amps.push_back(complex_to_json(z));
    return json{{"dims", {s.dimA(), s.dimB()}}, {"amplitudes", std::move(amps)}};
}

inline LoadedState state_from_json(const json& j) {
    if (!j.contains("dims") || !j.contains("amplitudes"))
        throw ParseError("state file needs 'dims' and 'amplitudes'");
    const auto& dims = j["dims"];
    if (!dims.is_array() || dims.size() != 2)
        throw ParseError("'dims' must be [n, m]");
    const std::size_t n = dims[0].get<std::size_t>();
    const std::size_t m = dims[1].get<std::size_t>();
    const auto& amps = j["amplitudes"];
    if (!amps.is_array())
        throw ParseError("'amplitudes' must be an array of [re, im] pairs");
    std::vector<Complex> v;
    v.reserve(amps.size());
    for (const auto& e : amps) v.push_back(complex_from_json(e));
    try {
        AmplitudeImport imp = from_amplitudes(v, n, m);
        std::string digest = state_digest(imp.state);
        return LoadedState{std::move(imp.state), imp.scale, std::move(digest)};
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
}

inline LoadedState load_state(const std::string& path) {
    return state_from_json(load_json_file(path));
}

inline void save_state(const std::string& path, const BipartiteState& s) {
    save_json_file(path, state_to_json(s));
}

/// On-disk protocol: version, digests of the two states, declared p, the
/// stage-1 elements plus the completion m0, and the optional stage-2 triple.
struct ProtocolFileData {
    int version = 1;
    std::string sourceDigest;
    std::string targetDigest;
    double p = 1.0;
    std::vector<InstrumentElement> stage1;
    ComplexMatrix m0{1, 1};
    std::optional<ProbabilisticTail> stage2;
};

inline json protocol_to_json(const Protocol& proto, const std::string& sourceDigest,
                             const std::string& targetDigest) {
    json stage1 = json::array();
    for (const InstrumentElement& el : proto.stage1)
        stage1.push_back(json{{"m", matrix_to_json(el.m)},
                              {"u", matrix_to_json(el.u)},
                              {"q", el.q}});
    json j{{"version", 1},
           {"source_digest", sourceDigest},
           {"target_digest", targetDigest},
           {"p", proto.declaredProbability},
           {"stage1", std::move(stage1)},
           {"m0", matrix_to_json(proto.m0)}};
    if (proto.stage2)
        j["stage2"] = json{{"n", matrix_to_json(proto.stage2->n)},
                           {"v", matrix_to_json(proto.stage2->v)},
                           {"nFail", matrix_to_json(proto.stage2->nFail)}};
    return j;
}

inline ProtocolFileData protocol_from_json(const json& j) {
    for (const char* key : {"version", "source_digest", "target_digest", "p", "stage1", "m0"})
        if (!j.contains(key))
            throw ParseError(std::string("protocol file is missing '") + key + "'");
    ProtocolFileData data;
    data.version = j["version"].get<int>();
    if (data.version != 1)
        throw ParseError("unsupported protocol version");
    data.sourceDigest = j["source_digest"].get<std::string>();
    data.targetDigest = j["target_digest"].get<std::string>();
    data.p = j["p"].get<double>();
    if (!j["stage1"].is_array() || j["stage1"].empty())
        throw ParseError("'stage1' must be a nonempty array");
    for (const auto& el : j["stage1"]) {
        if (!el.contains("m") || !el.contains("u") || !el.contains("q"))
            throw ParseError("stage1 element needs 'm', 'u', 'q'");
        data.stage1.push_back(InstrumentElement{matrix_from_json(el["m"]),
                                                matrix_from_json(el["u"]),
                                                el["q"].get<double>()});
    }
    data.m0 = matrix_from_json(j["m0"]);
    if (j.contains("stage2")) {
        const auto& s2 = j["stage2"];
        for (const char* key : {"n", "v", "nFail"})
            if (!s2.contains(key))
                throw ParseError("stage2 needs 'n', 'v', 'nFail'");
        data.stage2 = ProbabilisticTail{matrix_from_json(s2["n"]), matrix_from_json(s2["v"]),
                                        data.p, matrix_from_json(s2["nFail"])};
    }
    return data;
}

inline void save_protocol(const std::string& path, const Protocol& proto,
                          const std::string& sourceDigest, const std::string& targetDigest) {
    save_json_file(path, protocol_to_json(proto, sourceDigest, targetDigest));
}

inline ProtocolFileData load_protocol(const std::string& path) {
    return protocol_from_json(load_json_file(path));
}

/// Rebuild an in-memory protocol from file data. The intermediate state is
/// not stored on disk; it is recovered as the normalized output of the
/// heaviest stage-1 branch on the given source state.
inline Protocol to_protocol(const ProtocolFileData& data, const BipartiteState& a) {
    std::size_t heaviest = 0;
    for (std::size_t k = 1; k < data.stage1.size(); ++k)
        if (data.stage1[k].q > data.stage1[heaviest].q) heaviest = k;
    const InstrumentElement& el = data.stage1[heaviest];
    if (el.m.cols() < a.dimA() || el.u.cols() < a.dimB())
        throw ParseError("protocol ambient space is smaller than the state");
    const ComplexMatrix padded = a.padded(el.m.cols(), el.u.cols()).matrix();
    ComplexMatrix out = el.m * padded * el.u.transpose();
    const double norm = frobenius_norm(out);
    if (norm <= 1e-12)
        throw ParseError("protocol produces a null branch on this state");
    BipartiteState intermediate(out * Complex{1.0 / norm, 0.0}, 1e-6);
    return Protocol{data.stage1, data.m0, data.stage2, std::move(intermediate), data.p};
}

/// Plain matrix file ({"matrix": [[[re,im],...]]}) for operator inputs.
inline ComplexMatrix load_matrix(const std::string& path) {
    const json j = load_json_file(path);
    if (!j.contains("matrix"))
        throw ParseError("operator file needs a 'matrix' field");
    return matrix_from_json(j["matrix"]);
}

} // namespace locc::io
