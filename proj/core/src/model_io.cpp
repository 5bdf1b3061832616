#include "mmrisk/model_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mmrisk/errors.hpp"

namespace mmrisk {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw SchemaError(path + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& path) {
    for (const auto& item : obj.items()) {
        if (allowed.find(item.key()) == allowed.end()) {
            fail(path + "." + item.key(), "unknown key");
        }
    }
}

const json& require(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing");
    return *it;
}

double finite_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
}

int strict_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
}

ErlangMixture parse_mixture(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a nonempty array of mixture terms");
    ErlangMixture mix;
    double wsum = 0.0;
    for (size_t t = 0; t < v.size(); ++t) {
        const std::string at = path + "[" + std::to_string(t) + "]";
        const json& term = v[t];
        if (!term.is_object()) fail(at, "expected an object");
        reject_unknown_keys(term, {"w", "n", "delta"}, at);
        ErlangTerm e;
        e.w = finite_number(require(term, "w", at), at + ".w");
        if (!(e.w > 0.0)) fail(at + ".w", "weight must be positive");
        e.n = strict_integer(require(term, "n", at), at + ".n");
        if (e.n < 1) fail(at + ".n", "shape must be >= 1");
        if (e.n > 50) fail(at + ".n", "shape larger than 50 is not supported");
        e.delta = finite_number(require(term, "delta", at), at + ".delta");
        if (!(e.delta > 0.0)) fail(at + ".delta", "rate must be positive");
        wsum += e.w;
        mix.terms.push_back(e);
    }
    if (std::abs(wsum - 1.0) > 1e-12 * static_cast<double>(v.size())) {
        fail(path, "mixture weights sum to " + std::to_string(wsum) + ", expected 1");
    }
    return mix;
}

ProcessSpec parse_spec(const json& j, const std::string& origin) {
    if (!j.is_object()) fail(origin, "expected a JSON object");
    reject_unknown_keys(j, {"states", "Q", "laws"}, origin);

    ProcessSpec spec;
    const int m = strict_integer(require(j, "states", origin), origin + ".states");
    if (m < 1) fail(origin + ".states", "need at least one state");
    if (m > 64) fail(origin + ".states", "more than 64 states is not supported");
    spec.chain.m = m;

    const json& q = require(j, "Q", origin);
    if (!q.is_array() || static_cast<int>(q.size()) != m) {
        fail(origin + ".Q", "expected " + std::to_string(m) + " rows");
    }
    spec.chain.Q = Matrix(m, m);
    for (int k = 0; k < m; ++k) {
        const json& row = q[static_cast<size_t>(k)];
        const std::string at = origin + ".Q[" + std::to_string(k) + "]";
        if (!row.is_array() || static_cast<int>(row.size()) != m) {
            fail(at, "expected " + std::to_string(m) + " entries");
        }
        for (int r = 0; r < m; ++r) {
            spec.chain.Q(k, r) = finite_number(row[static_cast<size_t>(r)],
                                               at + "[" + std::to_string(r) + "]");
        }
    }

    const json& laws = require(j, "laws", origin);
    if (!laws.is_array() || static_cast<int>(laws.size()) != m) {
        fail(origin + ".laws", "expected one law per state");
    }
    for (int k = 0; k < m; ++k) {
        const std::string at = origin + ".laws[" + std::to_string(k) + "]";
        const json& law = laws[static_cast<size_t>(k)];
        if (!law.is_object()) fail(at, "expected an object");
        reject_unknown_keys(law, {"pos_rate", "pos_law", "neg_rate", "c"}, at);
        StateJumpLaw out;
        out.pos_rate = finite_number(require(law, "pos_rate", at), at + ".pos_rate");
        if (out.pos_rate < 0.0) fail(at + ".pos_rate", "rate must be >= 0");
        out.neg_rate = finite_number(require(law, "neg_rate", at), at + ".neg_rate");
        if (out.neg_rate < 0.0) fail(at + ".neg_rate", "rate must be >= 0");

        // the upward law travels with a positive upward rate, and the
        // exponential rate c with a positive downward rate
        if (out.pos_rate > 0.0) {
            out.pos_law = parse_mixture(require(law, "pos_law", at), at + ".pos_law");
        } else if (law.find("pos_law") != law.end()) {
            fail(at + ".pos_law", "present although pos_rate is 0");
        }
        if (out.neg_rate > 0.0) {
            out.neg_exp_rate = finite_number(require(law, "c", at), at + ".c");
            if (!(out.neg_exp_rate > 0.0)) fail(at + ".c", "rate must be positive");
        } else if (law.find("c") != law.end()) {
            fail(at + ".c", "present although neg_rate is 0");
        }
        spec.laws.push_back(std::move(out));
    }
    return spec;
}

} // namespace

ProcessSpec read_model_stream(std::istream& in, const std::string& origin) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        // covers syntax errors and out-of-range numbers such as 1e999
        throw SchemaError(origin + ": " + e.what());
    }
    return parse_spec(j, origin);
}

ProcessSpec read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path + ": cannot open file");
    return read_model_stream(in, path);
}

std::string write_model(const ProcessSpec& spec) {
    json j;
    j["states"] = spec.chain.m;
    json q = json::array();
    for (int k = 0; k < spec.chain.m; ++k) {
        json row = json::array();
        for (int r = 0; r < spec.chain.m; ++r) row.push_back(spec.chain.Q(k, r));
        q.push_back(std::move(row));
    }
    j["Q"] = std::move(q);
    json laws = json::array();
    for (const StateJumpLaw& law : spec.laws) {
        json l;
        l["pos_rate"] = law.pos_rate;
        if (law.pos_rate > 0.0) {
            json mix = json::array();
            for (const ErlangTerm& t : law.pos_law.terms) {
                mix.push_back({{"w", t.w}, {"n", t.n}, {"delta", t.delta}});
            }
            l["pos_law"] = std::move(mix);
        }
        l["neg_rate"] = law.neg_rate;
        if (law.neg_rate > 0.0) l["c"] = law.neg_exp_rate;
        laws.push_back(std::move(l));
    }
    j["laws"] = std::move(laws);
    return j.dump(2) + "\n";
}

} // namespace mmrisk
