#include "odonav/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace odonav {

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp + ": " + ec.message());
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void put_row(std::string& out, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) out += ',';
        out += format_number(v);
        first = false;
    }
    out += '\n';
}

}  // namespace

// Checks the header and the column count of every row.
std::vector<std::vector<double>> parse_numeric_csv(const std::string& text, const std::string& header) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty document");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw std::runtime_error("csv: expected header '" + header + "', got '" + line + "'");
    const std::size_t ncol = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(ncol);
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(p, &end);
            if (end == p || errno == ERANGE) throw std::runtime_error("csv: bad number on line " + std::to_string(lineno));
            row.push_back(v);
            if (*end == ',') {
                p = end + 1;
            } else if (*end == '\0') {
                break;
            } else {
                throw std::runtime_error("csv: unexpected character on line " + std::to_string(lineno));
            }
        }
        if (row.size() != ncol) throw std::runtime_error("csv: wrong column count on line " + std::to_string(lineno));
        if (!rows.empty() && !(row[0] > rows.back()[0])) {
            throw std::runtime_error("csv: timestamps not increasing on line " + std::to_string(lineno));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

const auto& parse_rows = parse_numeric_csv;

const std::string kImuHeader = "t,gx,gy,gz,ax,ay,az";
const std::string kSpeedHeader = "t,v";
const std::string kGnssHeader = "t,lat,lon,h,std_n,std_e,std_d,valid";
const std::string kNavHeader = "t,lat,lon,h,vn,ve,vd,roll,pitch,yaw";
const std::string kLogHeader = "t,type,component,innovation,normalized,applied";

}  // namespace

std::string format_imu_csv(const ImuSeries& s) {
    std::string out = kImuHeader + "\n";
    for (const auto& m : s) put_row(out, {m.t, m.gyro.x(), m.gyro.y(), m.gyro.z(), m.accel.x(), m.accel.y(), m.accel.z()});
    return out;
}

std::string format_speed_csv(const SpeedSeries& s) {
    std::string out = kSpeedHeader + "\n";
    for (const auto& m : s) put_row(out, {m.t, m.v});
    return out;
}

std::string format_gnss_csv(const GnssSeries& s) {
    std::string out = kGnssHeader + "\n";
    for (const auto& f : s) {
        put_row(out, {f.t, f.pos.lat, f.pos.lon, f.pos.h, f.std.x(), f.std.y(), f.std.z(), f.valid ? 1.0 : 0.0});
    }
    return out;
}

std::string format_nav_csv(const NavSeries& s) {
    std::string out = kNavHeader + "\n";
    for (const auto& n : s) {
        const EulerAngles e = rotation_to_euler(n.nav.att);
        put_row(out, {n.t, n.nav.pos.lat, n.nav.pos.lon, n.nav.pos.h, n.nav.vel.x(), n.nav.vel.y(), n.nav.vel.z(),
                      e.roll, e.pitch, e.yaw});
    }
    return out;
}

std::string format_update_log(const std::vector<UpdateLogEntry>& log) {
    std::string out = kLogHeader + "\n";
    for (const auto& e : log) {
        out += format_number(e.t) + ',' + e.type + ',' + std::to_string(e.component) + ',' +
               format_number(e.innovation) + ',' + format_number(e.normalized) + ',' + (e.applied ? "1" : "0") + '\n';
    }
    return out;
}

ImuSeries parse_imu_csv(const std::string& text) {
    ImuSeries out;
    for (const auto& r : parse_rows(text, kImuHeader)) out.push_back({r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])});
    return out;
}

SpeedSeries parse_speed_csv(const std::string& text) {
    SpeedSeries out;
    for (const auto& r : parse_rows(text, kSpeedHeader)) out.push_back({r[0], r[1]});
    return out;
}

GnssSeries parse_gnss_csv(const std::string& text) {
    GnssSeries out;
    for (const auto& r : parse_rows(text, kGnssHeader)) {
        if (r[7] != 0.0 && r[7] != 1.0) throw std::runtime_error("csv: valid flag must be 0 or 1");
        GnssFix f;
        f.t = r[0];
        f.pos = {r[1], r[2], r[3]};
        f.std = Vec3(r[4], r[5], r[6]);
        f.valid = r[7] == 1.0;
        out.push_back(f);
    }
    return out;
}

NavSeries parse_nav_csv(const std::string& text) {
    NavSeries out;
    for (const auto& r : parse_rows(text, kNavHeader)) {
        TimedNav n;
        n.t = r[0];
        n.nav.pos = {r[1], r[2], r[3]};
        n.nav.vel = Vec3(r[4], r[5], r[6]);
        n.nav.att = euler_to_rotation({r[7], r[8], r[9]});
        out.push_back(n);
    }
    return out;
}

}  // namespace odonav
