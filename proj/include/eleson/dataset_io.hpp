#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "eleson/ins.hpp"

namespace eleson {

// Line-oriented dataset format:
//   eleson-dataset v1; rate=<Hz>; T=<int>
//   label=<0|1|2>; vp=<0|1|->; session=<id>; location=<id>
//   <T lines of 9 comma-separated channel values>
//   <blank line between records>
void write_dataset(std::ostream& os, const Dataset& ds);
void write_dataset_file(const std::string& path, const Dataset& ds);
Dataset read_dataset(std::istream& is);
Dataset read_dataset_file(const std::string& path);

// Raw session format (stream input for the infer CLI):
//   eleson-session v1; rate=<Hz>
//   <lines of t,ax,ay,az,gx,gy,gz,mx,my,mz>, '#' comments allowed
void write_session(std::ostream& os, const std::vector<InsSample>& session, double sample_rate);
void write_session_file(const std::string& path, const std::vector<InsSample>& session, double sample_rate);
std::pair<std::vector<InsSample>, double> read_session(std::istream& is);
std::pair<std::vector<InsSample>, double> read_session_file(const std::string& path);

} // namespace eleson
