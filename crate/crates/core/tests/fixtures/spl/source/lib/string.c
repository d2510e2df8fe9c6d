/* Plain helpers without any variability. */
int strlen_plain(const char *s)
{
	int n = 0;
	while (s[n])
		n++;
	return n;
}
