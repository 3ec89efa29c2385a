#pragma once

#include <string>
#include <vector>

#include "odonav/types.hpp"

namespace odonav {

struct TimedNav {
    double t = 0.0;
    NavState nav;
};
using NavSeries = std::vector<TimedNav>;

struct UpdateLogEntry {
    double t = 0.0;
    std::string type;  // gnss, nhc, odo, zupt, zaru
    int component = 0;
    double innovation = 0.0;
    double normalized = 0.0;
    bool applied = false;
};

// Writes to <path>.tmp and renames, so readers never see a partial file.
void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

// %.17g formatting; all formats are plain CSV with a header line.
std::string format_number(double v);

std::string format_imu_csv(const ImuSeries& s);          // t,gx,gy,gz,ax,ay,az
std::string format_speed_csv(const SpeedSeries& s);      // t,v
std::string format_gnss_csv(const GnssSeries& s);        // t,lat,lon,h,std_n,std_e,std_d,valid
std::string format_nav_csv(const NavSeries& s);          // t,lat,lon,h,vn,ve,vd,roll,pitch,yaw
std::string format_update_log(const std::vector<UpdateLogEntry>& log);

// Generic numeric CSV with the given header; column 0 must increase.
std::vector<std::vector<double>> parse_numeric_csv(const std::string& text, const std::string& header);

ImuSeries parse_imu_csv(const std::string& text);
SpeedSeries parse_speed_csv(const std::string& text);
GnssSeries parse_gnss_csv(const std::string& text);
NavSeries parse_nav_csv(const std::string& text);

inline ImuSeries read_imu_csv(const std::string& path) { return parse_imu_csv(read_text(path)); }
inline SpeedSeries read_speed_csv(const std::string& path) { return parse_speed_csv(read_text(path)); }
inline GnssSeries read_gnss_csv(const std::string& path) { return parse_gnss_csv(read_text(path)); }
inline NavSeries read_nav_csv(const std::string& path) { return parse_nav_csv(read_text(path)); }

}  // namespace odonav
