#include "eleson/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace eleson {

namespace {

std::string fmt_float(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// parses "key=value" with optional surrounding spaces
bool parse_kv(const std::string& tok, std::string& key, std::string& value) {
    const size_t eq = tok.find('=');
    if (eq == std::string::npos) return false;
    auto strip = [](std::string s) {
        const size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    key = strip(tok.substr(0, eq));
    value = strip(tok.substr(eq + 1));
    return !key.empty();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

} // namespace

void write_dataset(std::ostream& os, const Dataset& ds) {
    ds.validate();
    const double rate = ds.sample_rate();
    const int t = ds.window_len();
    os << "eleson-dataset v1; rate=" << fmt_double(rate) << "; T=" << t << "\n";
    for (const auto& r : ds.records) {
        os << "label=" << state_code(r.label) << "; vp=";
        if (r.vp_flag < 0)
            os << "-";
        else
            os << r.vp_flag;
        os << "; session=" << r.session_id << "; location=" << r.location_id << "\n";
        for (int i = 0; i < t; ++i) {
            for (int c = 0; c < 9; ++c) {
                if (c) os << ",";
                os << fmt_float(r.window.samples(i, c));
            }
            os << "\n";
        }
        os << "\n";
    }
}

void write_dataset_file(const std::string& path, const Dataset& ds) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    write_dataset(f, ds);
    if (!f) throw DataError("write failed: " + path);
}

Dataset read_dataset(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty dataset stream");
    if (line.rfind("eleson-dataset v1", 0) != 0) throw DataError("bad dataset header: " + line);

    double rate = 0.0;
    int t = 0;
    for (const auto& tok : split(line, ';')) {
        std::string k, v;
        if (parse_kv(tok, k, v)) {
            if (k == "rate") rate = std::stod(v);
            if (k == "T") t = std::stoi(v);
        }
    }
    if (rate <= 0.0 || t <= 1) throw DataError("dataset header missing rate/T");

    Dataset ds;
    ds.meta.format_version = 1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("label=", 0) != 0) throw DataError("expected record label line, got: " + line);
        LabeledWindow rec;
        for (const auto& tok : split(line, ';')) {
            std::string k, v;
            if (!parse_kv(tok, k, v)) continue;
            if (k == "label") rec.label = state_from_code(std::stoi(v));
            else if (k == "vp") rec.vp_flag = (v == "-") ? -1 : std::stoi(v);
            else if (k == "session") rec.session_id = v;
            else if (k == "location") rec.location_id = v;
        }
        rec.window.sample_rate = rate;
        rec.window.samples.resize(t, 9);
        for (int i = 0; i < t; ++i) {
            if (!std::getline(is, line)) throw DataError("truncated record in dataset");
            const auto vals = split(line, ',');
            if (vals.size() != 9) throw DataError("expected 9 channel values, got " + std::to_string(vals.size()));
            for (int c = 0; c < 9; ++c) rec.window.samples(i, c) = std::stof(vals[static_cast<size_t>(c)]);
        }
        ds.records.push_back(std::move(rec));
    }
    ds.refresh_proportions();
    ds.validate();
    return ds;
}

Dataset read_dataset_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open dataset file: " + path);
    return read_dataset(f);
}

void write_session(std::ostream& os, const std::vector<InsSample>& session, double sample_rate) {
    os << "eleson-session v1; rate=" << fmt_double(sample_rate) << "\n";
    for (const auto& s : session) {
        os << fmt_double(s.t);
        for (int k = 0; k < 3; ++k) os << "," << fmt_double(s.accel[k]);
        for (int k = 0; k < 3; ++k) os << "," << fmt_double(s.gyro[k]);
        for (int k = 0; k < 3; ++k) os << "," << fmt_double(s.mag[k]);
        os << "\n";
    }
}

void write_session_file(const std::string& path, const std::vector<InsSample>& session, double sample_rate) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    write_session(f, session, sample_rate);
}

std::pair<std::vector<InsSample>, double> read_session(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty session stream");
    if (line.rfind("eleson-session v1", 0) != 0) throw DataError("bad session header: " + line);
    double rate = 0.0;
    for (const auto& tok : split(line, ';')) {
        std::string k, v;
        if (parse_kv(tok, k, v) && k == "rate") rate = std::stod(v);
    }
    if (rate <= 0.0) throw DataError("session header missing rate");

    std::vector<InsSample> out;
    while (std::getline(is, line)) {
        const size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto vals = split(line, ',');
        if (vals.size() != 10) throw DataError("expected 10 values per session line");
        InsSample s;
        s.t = std::stod(vals[0]);
        for (int k = 0; k < 3; ++k) {
            s.accel[k] = std::stod(vals[static_cast<size_t>(1 + k)]);
            s.gyro[k] = std::stod(vals[static_cast<size_t>(4 + k)]);
            s.mag[k] = std::stod(vals[static_cast<size_t>(7 + k)]);
        }
        out.push_back(s);
    }
    return {out, rate};
}

std::pair<std::vector<InsSample>, double> read_session_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open session file: " + path);
    return read_session(f);
}

} // namespace eleson
