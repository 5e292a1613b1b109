#include "sdl/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sdl {

namespace {

std::string num(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Round step for axis ticks: 1, 2 or 5 times a power of ten.
double nice_step(double span, int target)
{
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag)
            return m * mag;
    return 10.0 * mag;
}

} // namespace

std::string file_header(const std::string& config_digest, const std::string& description)
{
    std::string h = std::string("# ") + kToolName + " " + kToolVersion + " config_digest=" + config_digest + "\n";
    std::istringstream in(description);
    for (std::string line; std::getline(in, line);)
        h += "# " + line + "\n";
    return h;
}

std::string sweep_csv(const SParamGrid& g, const std::string& header)
{
    std::ostringstream os;
    os << header << "# drive " << num(g.drive_dbm) << " dBm; schedule: " << g.schedule_summary << "\n";
    for (const auto& w : g.warnings)
        os << "# warning: " << w << "\n";
    os << "frequency_hz";
    for (std::size_t o = 1; o <= g.ports; ++o)
        for (std::size_t i = 1; i <= g.ports; ++i)
            os << ",s" << o << i << "_re,s" << o << i << "_im";
    os << "\n";
    for (std::size_t k = 0; k < g.size(); ++k) {
        os << num(g.frequencies[k]);
        for (const auto& v : g.s[k])
            os << ',' << num(v.real()) << ',' << num(v.imag());
        os << "\n";
    }
    return os.str();
}

std::string metrics_csv(const CirculatorMetrics& m, const std::string& header)
{
    std::ostringstream os;
    os << header;
    for (const auto& f : m.flags)
        os << "# flag: " << f << "\n";
    os << "key,value\n";
    for (std::size_t i = 0; i < 4; ++i) {
        const auto [o, n] = kForwardPaths[i];
        os << "il_db_s" << o << n << ',' << num(m.il_db[i]) << "\n";
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const auto [o, n] = kReversePaths[i];
        os << "iso_db_s" << o << n << ',' << num(m.iso_db[i]) << "\n";
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const auto [o, n] = kForwardPaths[i];
        os << "directivity_db_" << o << n << ',' << num(m.directivity_db[i]) << "\n";
    }
    for (std::size_t i = 0; i < 4; ++i)
        os << "rl_db_port" << i + 1 << ',' << num(m.rl_db[i]) << "\n";
    double il_worst = *std::max_element(m.il_db.begin(), m.il_db.end());
    os << "il_db," << num(il_worst) << "\n";
    os << "iso_db," << num(m.worst_iso_db) << "\n";
    os << "iso_threshold_db," << num(m.iso_threshold_db) << "\n";
    if (m.il_window_db)
        os << "il_window_db," << num(*m.il_window_db) << "\n";
    os << "center_frequency_hz," << num(m.center_frequency) << "\n";
    os << "band_start_hz," << num(m.band_start) << "\n";
    os << "band_stop_hz," << num(m.band_stop) << "\n";
    os << "bandwidth_hz," << num(m.bandwidth) << "\n";
    os << "fbw," << num(m.fbw) << "\n";
    os << "best_directivity_db," << num(m.best_directivity_db) << "\n";
    return os.str();
}

std::string spectrum_csv(const SpectrumReport& r, const std::string& header)
{
    std::ostringstream os;
    os << header;
    os << "# f0 " << num(r.f0) << " Hz (requested " << num(r.requested_f0) << "), f_mod " << num(r.f_mod)
       << " Hz, drive " << num(r.drive_dbm) << " dBm, window " << r.window_periods << " periods\n";
    os << "# port-2 insertion loss " << num(r.il_port2_db) << " dB; port-3 isolation " << num(r.iso_port3_db)
       << " dB; port-4 isolation " << num(r.iso_port4_db) << " dB; reflected at port 1 "
       << num(r.reflected_dbm) << " dBm\n";
    os << "port,frequency_hz,power_dbm,order\n";
    for (const auto& p : r.ports)
        for (const auto& l : p.lines)
            os << p.port << ',' << num(l.frequency) << ',' << num(l.power_dbm) << ',' << l.order << "\n";
    return os.str();
}

std::string modsweep_csv(const std::vector<ModPoint>& points, const std::string& header)
{
    std::ostringstream os;
    os << header;
    if (auto best = modfreq_optimum(points))
        os << "# isolation optimum at f_mod " << num(points[*best].f_mod) << " Hz\n";
    os << "f_mod_hz,il_db,iso_db,requested_f_mod_hz,f0_hz,status\n";
    for (const auto& p : points) {
        std::string status = p.ok ? "ok" : p.error;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        os << num(p.f_mod) << ',' << num(p.il_db) << ',' << num(p.iso_db) << ',' << num(p.requested_f_mod)
           << ',' << num(p.f0) << ',' << status << "\n";
    }
    return os.str();
}

std::string linecheck_csv(const LineCheck& lc, const std::string& header)
{
    std::ostringstream os;
    os << header;
    for (const auto* d : {&lc.delay_a, &lc.delay_b})
        for (const auto& w : d->warnings)
            os << "# warning: " << w << "\n";
    for (const auto& n : lc.notes)
        os << "# note: " << n << "\n";
    os << "frequency_hz";
    for (const char* l : {"a", "b"})
        for (const char* p : {"11", "21", "12", "22"})
            os << ',' << l << "_s" << p << "_re," << l << "_s" << p << "_im";
    os << ",a_group_delay_s,b_group_delay_s\n";
    for (std::size_t k = 0; k < lc.line_a.size(); ++k) {
        os << num(lc.line_a.frequencies[k]);
        for (const auto* g : {&lc.line_a, &lc.line_b})
            for (auto [o, i] : {std::pair{1, 1}, {2, 1}, {1, 2}, {2, 2}}) {
                const auto v = g->at(k, static_cast<std::size_t>(o), static_cast<std::size_t>(i));
                os << ',' << num(v.real()) << ',' << num(v.imag());
            }
        os << ',' << num(lc.delay_a.points[k].delay) << ',' << num(lc.delay_b.points[k].delay) << "\n";
    }
    return os.str();
}

std::string render_svg(const Plot& plot)
{
    constexpr double W = 720, H = 440, L = 70, R = 160, T = 40, B = 55;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) {
        x0 = 0;
        x1 = 1;
        y0 = 0;
        y1 = 1;
    }
    if (x1 == x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (y1 == y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double ys = nice_step(y1 - y0, 6);
    y0 = std::floor(y0 / ys) * ys;
    y1 = std::ceil(y1 / ys) * ys;
    const double xs = nice_step(x1 - x0, 6);

    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

    std::ostringstream os;
    char buf[256];
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\" "
                  "font-family=\"sans-serif\" font-size=\"12\">\n",
                  W, H, W, H);
    os << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">", (L + W - R) / 2);
    os << buf << xml_escape(plot.title) << "</text>\n";

    for (double y = y0; y <= y1 + 1e-9 * ys; y += ys) {
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#ddd\"/>"
                      "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%g</text>\n",
                      L, py(y), W - R, py(y), L - 6, py(y) + 4, std::abs(y) < 1e-12 * ys ? 0.0 : y);
        os << buf;
    }
    for (double x = std::ceil(x0 / xs) * xs; x <= x1 + 1e-9 * xs; x += xs) {
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#eee\"/>"
                      "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%g</text>\n",
                      px(x), T, px(x), H - B, px(x), H - B + 16, x);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  L, T, W - L - R, H - T - B);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">", (L + W - R) / 2, H - 12);
    os << buf << xml_escape(plot.x_label) << "</text>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"16\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">",
                  (T + H - B) / 2, (T + H - B) / 2);
    os << buf << xml_escape(plot.y_label) << "</text>\n";

    for (std::size_t s = 0; s < plot.series.size(); ++s) {
        const auto& ser = plot.series[s];
        const char* color = colors[s % 8];
        if (plot.stems) {
            for (std::size_t i = 0; i < ser.x.size(); ++i) {
                if (!std::isfinite(ser.y[i]))
                    continue;
                std::snprintf(buf, sizeof buf,
                              "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\"/>\n",
                              px(ser.x[i]), py(y0), px(ser.x[i]), py(std::clamp(ser.y[i], y0, y1)), color);
                os << buf;
            }
        } else {
            os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << color << "\" points=\"";
            for (std::size_t i = 0; i < ser.x.size(); ++i) {
                if (!std::isfinite(ser.y[i]))
                    continue;
                std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(ser.x[i]), py(std::clamp(ser.y[i], y0, y1)));
                os << buf;
            }
            os << "\"/>\n";
        }
        const double ly = T + 14 + 18 * static_cast<double>(s);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                      "<text x=\"%g\" y=\"%g\">",
                      W - R + 10, ly, W - R + 30, ly, color, W - R + 36, ly + 4);
        os << buf << xml_escape(ser.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace sdl
