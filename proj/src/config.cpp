#include "seqforge/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "seqforge/errors.hpp"

namespace seqforge {

namespace {

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        const long long x = std::stoll(v);
        if (x < 0) throw std::out_of_range("negative");
        return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
        throw ConfigError("config: invalid integer for " + key + ": '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("config: invalid number for " + key + ": '" + v + "'");
    }
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void TrainingConfig::validate() const {
    if (K < 1) throw ConfigError("config: K must be >= 1");
    if (lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
    if (beta <= 0.0 || beta > 1.0) throw ConfigError("config: beta must be in (0, 1]");
    if (I < 1) throw ConfigError("config: I must be >= 1");
    if (collaborative_epochs < 1) throw ConfigError("config: collaborative_epochs must be >= 1");
    if (interpreter_inner_epochs < 1)
        throw ConfigError("config: interpreter_inner_epochs must be >= 1");
    if (B2 < 1) throw ConfigError("config: B2 must be >= 1");
    if (interpreter_lr <= 0.0 || classifier_lr <= 0.0)
        throw ConfigError("config: learning rates must be positive");
    if (m1 < 1 || m2 < 1 || m3 < 1) throw ConfigError("config: hidden sizes must be >= 1");
    if (attention_dim < 1) throw ConfigError("config: attention_dim must be >= 1");
}

std::map<std::string, std::string> TrainingConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["K"] = std::to_string(K);
    m["lambda"] = fmt_double(lambda);
    m["beta"] = fmt_double(beta);
    m["I"] = std::to_string(I);
    m["collaborative_epochs"] = std::to_string(collaborative_epochs);
    m["interpreter_inner_epochs"] = std::to_string(interpreter_inner_epochs);
    m["classifier_inner_epochs"] = std::to_string(classifier_inner_epochs);
    m["B2"] = std::to_string(B2);
    m["interpreter_lr"] = fmt_double(interpreter_lr);
    m["classifier_lr"] = fmt_double(classifier_lr);
    m["seed"] = std::to_string(seed);
    m["S"] = std::to_string(S);
    m["m1"] = std::to_string(m1);
    m["m2"] = std::to_string(m2);
    m["m3"] = std::to_string(m3);
    m["attention_dim"] = std::to_string(attention_dim);
    m["conv_channels"] = std::to_string(conv_channels);
    m["recurrent_hidden"] = std::to_string(recurrent_hidden);
    return m;
}

void TrainingConfig::set(const std::string& key, const std::string& value) {
    if (key == "K") K = parse_size(key, value);
    else if (key == "lambda") lambda = parse_double(key, value);
    else if (key == "beta") beta = parse_double(key, value);
    else if (key == "I") I = parse_size(key, value);
    else if (key == "collaborative_epochs") collaborative_epochs = parse_size(key, value);
    else if (key == "interpreter_inner_epochs") interpreter_inner_epochs = parse_size(key, value);
    else if (key == "classifier_inner_epochs") classifier_inner_epochs = parse_size(key, value);
    else if (key == "B2") B2 = parse_size(key, value);
    else if (key == "interpreter_lr") interpreter_lr = parse_double(key, value);
    else if (key == "classifier_lr") classifier_lr = parse_double(key, value);
    else if (key == "seed") seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "S") S = parse_size(key, value);
    else if (key == "m1") m1 = parse_size(key, value);
    else if (key == "m2") m2 = parse_size(key, value);
    else if (key == "m3") m3 = parse_size(key, value);
    else if (key == "attention_dim") attention_dim = parse_size(key, value);
    else if (key == "conv_channels") conv_channels = parse_size(key, value);
    else if (key == "recurrent_hidden") recurrent_hidden = parse_size(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
}

TrainingConfig TrainingConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    TrainingConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

void TrainingConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    for (const auto& [k, v] : to_map()) out << k << " = " << v << "\n";
}

std::string TrainingConfig::hash() const {
    std::ostringstream ss;
    for (const auto& [k, v] : to_map()) ss << k << "=" << v << ";";
    const std::string s = ss.str();
    std::uint64_t acc = 0xcbf29ce484222325ULL;
    for (char c : s) {
        acc ^= static_cast<unsigned char>(c);
        acc *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(acc));
    return buf;
}

}  // namespace seqforge
