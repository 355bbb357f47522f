#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "afdo/chaos.hpp"
#include "afdo/types.hpp"

namespace afdo {

/// Shortest decimal text that parses back to exactly v; "nan"/"inf"/"-inf" for non-finite values.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

/// Column-oriented CSV table; every cell is pre-formatted text.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    class Row {
    public:
        Row& operator<<(double v) { return add(format_double(v)); }
        Row& operator<<(int v) { return add(std::to_string(v)); }
        Row& operator<<(std::size_t v) { return add(std::to_string(v)); }
        Row& operator<<(bool v) { return add(v ? "1" : "0"); }
        Row& operator<<(std::string_view v) { return add(std::string(v)); }
        Row& operator<<(const char* v) { return add(v); }
        Row& operator<<(const std::optional<double>& v) { return add(v ? format_double(*v) : std::string()); }
        Row& operator<<(const std::optional<int>& v) { return add(v ? std::to_string(*v) : std::string()); }

    private:
        friend class CsvTable;
        explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
        Row& add(std::string s)
        {
            cells_.push_back(std::move(s));
            return *this;
        }
        std::vector<std::string>& cells_;
    };

    Row row()
    {
        rows_.emplace_back();
        return Row(rows_.back());
    }

    std::size_t size() const { return rows_.size(); }
    const std::vector<std::string>& columns() const { return columns_; }

    void write(std::ostream& os) const
    {
        write_line(os, columns_);
        for (const auto& r : rows_) {
            if (r.size() != columns_.size()) throw std::logic_error("CsvTable: row width does not match the header");
            write_line(os, r);
        }
    }

    void save(const std::string& path) const
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + path + " for writing");
        write(f);
    }

private:
    static std::string quote(const std::string& s)
    {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + '"';
    }
    static void write_line(std::ostream& os, const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << quote(cells[i]);
        os << '\n';
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Malformed configuration or command-line setting.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Flat key=value settings. Files allow '#' comments and blank lines; later
/// assignments (including command-line overrides) replace earlier ones.
/// Keys never read by the program are reported by unused_keys().
class KeyValueConfig {
public:
    void parse(std::istream& in, const std::string& origin = "<input>")
    {
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            if (trim(line).empty()) continue;
            try {
                set(line);
            } catch (const ConfigError& e) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }

    void load(const std::string& path)
    {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot read config file " + path);
        parse(f, path);
    }

    /// Applies one "key=value" assignment.
    void set(std::string_view assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
        const std::string key = trim(assignment.substr(0, eq));
        if (key.empty()) throw ConfigError("empty key in '" + std::string(assignment) + "'");
        values_[key] = trim(assignment.substr(eq + 1));
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const
    {
        used_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const
    {
        used_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : to_double(key, it->second);
    }

    int get_int(const std::string& key, int fallback) const
    {
        used_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        int v = 0;
        const auto& s = it->second;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const
    {
        used_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const auto& s = it->second;
        if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
        if (s == "0" || s == "false" || s == "no" || s == "off") return false;
        throw ConfigError(key + ": expected a boolean, got '" + s + "'");
    }

    /// Comma-separated list of numbers.
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const
    {
        used_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        for (const auto& item : split(it->second)) out.push_back(to_double(key, item));
        return out;
    }

    std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const
    {
        used_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : split(it->second);
    }

    std::vector<std::string> unused_keys() const
    {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_) {
            if (!used_.count(k)) out.push_back(k);
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(std::string_view s)
    {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return std::string(s.substr(b, e - b + 1));
    }
    static std::vector<std::string> split(const std::string& s)
    {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }
    static double to_double(const std::string& key, const std::string& s)
    {
        double v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw ConfigError(key + ": expected a number, got '" + s + "'");
        return v;
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

/// Evenly spaced values from start to stop inclusive (count = 1 gives start).
inline std::vector<double> linspace(double start, double stop, int count)
{
    if (count < 1) throw ConfigError("range count must be at least 1");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) out.push_back(count == 1 ? start : start + (stop - start) * k / (count - 1));
    return out;
}

inline nlohmann::ordered_json to_json(const Params& p)
{
    return {{"epsilon", p.epsilon}, {"delta", p.delta}, {"gamma", p.gamma}, {"omega", p.omega}, {"beta", p.beta}};
}

inline nlohmann::ordered_json to_json(const LyapunovReport& r)
{
    nlohmann::ordered_json j;
    j["verdict"] = std::string(to_string(r.verdict));
    j["exponents_log2_per_iterate"] = r.exponents;
    j["exponents_ln_per_time"] = r.exponents_per_time;
    j["time_direction_exponent"] = r.time_exponent;
    j["exponent_sum"] = r.exponent_sum();
    j["dimension"] = r.dimension ? nlohmann::ordered_json(*r.dimension) : nlohmann::ordered_json(nullptr);
    j["sidedness"] = r.sidedness ? nlohmann::ordered_json(std::string(to_string(*r.sidedness))) : nlohmann::ordered_json(nullptr);
    j["iterations_used"] = r.iterations_used;
    j["last_slope"] = r.last_slope;
    j["final_state"] = {r.final_state.x, r.final_state.y};
    return j;
}

/// Minimal deterministic SVG scatter/line plot in data coordinates.
class SvgPlot {
public:
    SvgPlot(double x_min, double x_max, double y_min, double y_max, int width = 640, int height = 480)
        : x0_(x_min), x1_(x_max), y0_(y_min), y1_(y_max), w_(width), h_(height)
    {
        if (!(x_max > x_min && y_max > y_min)) throw std::invalid_argument("SvgPlot: empty data range");
    }

    void polyline(const std::vector<PhaseState>& pts, std::string_view color, double width = 1.0)
    {
        if (pts.size() < 2) return;
        body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << num(width) << "\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) body_ << (i ? " " : "") << num(px(pts[i].x)) << ',' << num(py(pts[i].y));
        body_ << "\"/>\n";
    }

    void points(const std::vector<PhaseState>& pts, std::string_view color, double radius = 1.0)
    {
        for (const auto& p : pts) {
            body_ << "<circle cx=\"" << num(px(p.x)) << "\" cy=\"" << num(py(p.y)) << "\" r=\"" << num(radius)
                  << "\" fill=\"" << color << "\"/>\n";
        }
    }

    void rect(double x, double y, double w, double h, std::string_view color)
    {
        body_ << "<rect x=\"" << num(px(x)) << "\" y=\"" << num(py(y + h)) << "\" width=\"" << num(w / (x1_ - x0_) * w_)
              << "\" height=\"" << num(h / (y1_ - y0_) * h_) << "\" fill=\"" << color << "\"/>\n";
    }

    void label(std::string_view text)
    {
        body_ << "<text x=\"6\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">" << text << "</text>\n";
    }

    void save(const std::string& path) const
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + path + " for writing");
        f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\" viewBox=\"0 0 "
          << w_ << ' ' << h_ << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
          << body_.str() << "</svg>\n";
    }

private:
    double px(double x) const { return (x - x0_) / (x1_ - x0_) * w_; }
    double py(double y) const { return (y1_ - y) / (y1_ - y0_) * h_; }
    static std::string num(double v)
    {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
        return {buf, r.ptr};
    }

    double x0_, x1_, y0_, y1_;
    int w_, h_;
    std::ostringstream body_;
};

} // namespace afdo
