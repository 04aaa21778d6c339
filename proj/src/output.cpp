#include "qdiss/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdiss/errors.hpp"

namespace qdiss {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : f_(std::fopen(path.c_str(), "w")) {
        if (!f_) throw ConfigError("cannot open " + path + " for writing");
        path_ = path;
    }
    ~CsvWriter() {
        if (f_) std::fclose(f_);
    }
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void raw(const std::string& s) { std::fputs(s.c_str(), f_); }
    void field(double v, bool last) { std::fprintf(f_, last ? "%.17g\n" : "%.17g,", v); }
    void close() {
        if (std::fclose(f_) != 0) {
            f_ = nullptr;
            throw ConfigError("error writing " + path_);
        }
        f_ = nullptr;
    }

private:
    std::FILE* f_;
    std::string path_;
};

}  // namespace

void write_populations_csv(const std::string& path, const std::vector<double>& t,
                           const std::vector<std::vector<double>>& p,
                           const std::vector<double>& sigma_z) {
    CsvWriter w(path);
    std::string header = "t";
    for (std::size_t s = 0; s < p.size(); ++s) header += ",P_" + std::to_string(s + 1);
    if (!sigma_z.empty()) header += ",sigma_z";
    header += "\n";
    w.raw(header);
    for (std::size_t i = 0; i < t.size(); ++i) {
        w.field(t[i], false);
        for (std::size_t s = 0; s < p.size(); ++s)
            w.field(p[s][i], s + 1 == p.size() && sigma_z.empty());
        if (!sigma_z.empty()) w.field(sigma_z[i], true);
    }
    w.close();
}

void write_dissipation_csv(const std::string& path, const std::vector<double>& omega,
                           const std::vector<double>& t, const std::vector<double>& d,
                           const std::vector<double>& e) {
    const std::size_t n_t = t.size();
    if (d.size() != omega.size() * n_t || e.size() != d.size())
        throw ConfigError("dissipation raster shape mismatch");
    CsvWriter w(path);
    w.raw("omega,t,D,E\n");
    for (std::size_t iw = 0; iw < omega.size(); ++iw)
        for (std::size_t it = 0; it < n_t; ++it) {
            w.field(omega[iw], false);
            w.field(t[it], false);
            w.field(d[iw * n_t + it], false);
            w.field(e[iw * n_t + it], true);
        }
    w.close();
}

void write_steady_csv(const std::string& path, const SteadyColumn& col) {
    CsvWriter w(path);
    w.raw(col.se.empty() ? "omega,E_inf\n" : "omega,E_inf,stderr\n");
    for (std::size_t i = 0; i < col.omega.size(); ++i) {
        w.field(col.omega[i], false);
        w.field(col.e_inf[i], col.se.empty());
        if (!col.se.empty()) w.field(col.se[i], true);
    }
    w.close();
}

void write_manifest(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw ConfigError("error writing " + path);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

TimeSeriesTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    TimeSeriesTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + " is empty");
    t.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != t.header.size())
            throw ConfigError(path + ": ragged row with " + std::to_string(fields.size()) +
                              " fields");
        std::vector<double> row;
        for (const auto& f : fields) {
            try {
                row.push_back(std::stod(f));
            } catch (const std::exception&) {
                throw ConfigError(path + ": non-numeric field \"" + f + "\"");
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

SteadyColumn read_steady_csv(const std::string& path) {
    TimeSeriesTable t = read_csv_table(path);
    if (t.header.size() < 2 || t.header[0] != "omega" || t.header[1] != "E_inf")
        throw ConfigError(path + ": expected columns omega,E_inf[,stderr]");
    SteadyColumn col;
    const bool has_se = t.header.size() >= 3 && t.header[2] == "stderr";
    for (const auto& r : t.rows) {
        col.omega.push_back(r[0]);
        col.e_inf.push_back(r[1]);
        if (has_se) col.se.push_back(r[2]);
    }
    return col;
}

std::string CompareReport::format() const {
    std::ostringstream os;
    os << "channel  points        L1            L2           sup     sup/scale\n";
    for (const auto& c : channels) {
        const double rel = c.scale > 0.0 ? c.sup / c.scale : 0.0;
        char line[160];
        std::snprintf(line, sizeof(line), "%7d  %6zu  %12.5g  %12.5g  %12.5g  %10.3g\n",
                      c.channel, c.n_points, c.l1, c.l2, c.sup, rel);
        os << line;
    }
    if (interpolated) os << "(series B interpolated onto A's grid)\n";
    return os.str();
}

nlohmann::json CompareReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : channels)
        arr.push_back({{"channel", c.channel},
                       {"n_points", c.n_points},
                       {"l1", c.l1},
                       {"l2", c.l2},
                       {"sup", c.sup},
                       {"scale", c.scale}});
    return {{"channels", arr}, {"interpolated", interpolated}};
}

CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b,
                           bool allow_interp) {
    namespace fs = std::filesystem;
    CompareReport rep;
    bool any = false;
    for (int ch = 1; ch <= 2; ++ch) {
        const std::string fa = dir_a + "/steady_ch" + std::to_string(ch) + ".csv";
        const std::string fb = dir_b + "/steady_ch" + std::to_string(ch) + ".csv";
        const bool ea = fs::exists(fa), eb = fs::exists(fb);
        if (!ea && !eb) continue;
        if (ea != eb)
            throw ConfigError("channel " + std::to_string(ch) +
                              " present in only one run directory");
        any = true;
        SteadyColumn a = read_steady_csv(fa);
        SteadyColumn b = read_steady_csv(fb);

        std::vector<double> omega, va, vb;
        bool grids_match = a.omega.size() == b.omega.size();
        if (grids_match)
            for (std::size_t i = 0; i < a.omega.size(); ++i)
                if (a.omega[i] != b.omega[i]) {
                    grids_match = false;
                    break;
                }
        if (grids_match) {
            omega = a.omega;
            va = a.e_inf;
            vb = b.e_inf;
        } else if (!allow_interp) {
            throw ConfigError(
                "frequency grids differ between the two runs; rerun with --interp to "
                "compare on the overlapping range");
        } else {
            rep.interpolated = true;
            for (std::size_t i = 0; i < a.omega.size(); ++i) {
                const double w = a.omega[i];
                if (w < b.omega.front() || w > b.omega.back()) continue;
                auto it = std::lower_bound(b.omega.begin(), b.omega.end(), w);
                std::size_t hi = static_cast<std::size_t>(it - b.omega.begin());
                double y;
                if (hi == 0) {
                    y = b.e_inf.front();
                } else if (hi >= b.omega.size()) {
                    y = b.e_inf.back();
                } else {
                    const double u =
                        (w - b.omega[hi - 1]) / (b.omega[hi] - b.omega[hi - 1]);
                    y = (1.0 - u) * b.e_inf[hi - 1] + u * b.e_inf[hi];
                }
                omega.push_back(w);
                va.push_back(a.e_inf[i]);
                vb.push_back(y);
            }
            if (omega.empty())
                throw ConfigError("frequency grids do not overlap; nothing to compare");
        }

        ChannelComparison c;
        c.channel = ch;
        c.n_points = omega.size();
        double l2 = 0.0;
        for (std::size_t i = 0; i < omega.size(); ++i) {
            const double dw =
                i + 1 < omega.size() ? omega[i + 1] - omega[i]
                                     : (omega.size() > 1 ? omega[i] - omega[i - 1] : 1.0);
            const double diff = std::abs(va[i] - vb[i]);
            c.l1 += diff * dw;
            l2 += diff * diff * dw;
            c.sup = std::max(c.sup, diff);
            c.scale = std::max(c.scale, std::abs(va[i]));
        }
        c.l2 = std::sqrt(l2);
        rep.channels.push_back(c);
    }
    if (!any)
        throw ConfigError("no steady_ch*.csv found in either directory; run `qdiss run` first");
    return rep;
}

}  // namespace qdiss
