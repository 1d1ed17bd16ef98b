#include <stdio.h>
#include <stdlib.h>
#include <unistd.h>

void become_user_from_input(void)
{
    int u;
    scanf("%d", &u);
    setuid(u);
}

void echo_number(void)
{
    int v;
    scanf("%d", &v);
    printf("%d\n", v);
}

void switch_euid_from_line(void)
{
    char buf[16];
    int n;
    fgets(buf, sizeof(buf), stdin);
    n = atoi(buf);
    seteuid(n);
}
