#include "groupot/groupot.hpp"
int main(int, char**) { return 0; }
