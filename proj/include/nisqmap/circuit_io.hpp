#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "nisqmap/circuit.hpp"

namespace nisqmap {

inline nlohmann::ordered_json circuit_to_json(const Circuit& c) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["n_qubits"] = c.n_qubits;
    j["family"] = family_name(c.family);
    j["seed"] = c.seed;
    nlohmann::ordered_json gates = nlohmann::ordered_json::array();
    for (const auto& g : c.gates) {
        nlohmann::ordered_json jg;
        jg["op"] = op_name(g.op);
        if (g.is_two_qubit())
            jg["qubits"] = {g.q0, g.q1};
        else
            jg["qubits"] = {g.q0};
        if (g.param) jg["param"] = *g.param;
        jg["duration"] = g.duration_us;
        gates.push_back(std::move(jg));
    }
    j["gates"] = std::move(gates);
    return j;
}

inline Circuit circuit_from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j.at("version").get<int>() != 1)
        throw std::invalid_argument("circuit file: unsupported or missing version");
    Circuit c;
    c.n_qubits = j.at("n_qubits").get<int>();
    c.family = family_from_name(j.at("family").get<std::string>());
    c.seed = j.at("seed").get<uint64_t>();
    for (const auto& jg : j.at("gates")) {
        OpKind op = op_from_name(jg.at("op").get<std::string>());
        const auto& qs = jg.at("qubits");
        std::optional<double> param;
        if (jg.contains("param")) param = jg.at("param").get<double>();
        double dur = jg.at("duration").get<double>();
        if (qs.size() == 2)
            c.push(Gate::two(op, qs[0].get<int>(), qs[1].get<int>(), param, dur));
        else if (qs.size() == 1)
            c.push(Gate::one(op, qs[0].get<int>(), param, dur));
        else
            throw std::invalid_argument("circuit file: gate must have 1 or 2 qubits");
    }
    return c;
}

inline void write_circuit(const Circuit& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << circuit_to_json(c).dump(1) << "\n";
}

inline Circuit read_circuit(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    nlohmann::json j;
    f >> j;
    return circuit_from_json(j);
}

}  // namespace nisqmap
