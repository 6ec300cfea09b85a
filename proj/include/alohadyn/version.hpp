#ifndef ALOHADYN_VERSION_HPP
#define ALOHADYN_VERSION_HPP

#define ALOHADYN_VERSION "0.1.0"

#endif
